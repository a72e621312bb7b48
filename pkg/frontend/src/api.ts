// Thin typed client for the eqgames service. Every state change goes
// through the server; the client never decides admissibility.

import type {
  ClaimPair, DetState, ReplayResult, SessionSnapshot, SystemInfo, Verdict,
} from './types.js';

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let payload: unknown = null;
    try {
      payload = text ? JSON.parse(text) : null;
    } catch {
      payload = text;
    }
    if (!response.ok) {
      const detail = payload && typeof payload === 'object' && 'detail' in payload
        ? String((payload as { detail: unknown }).detail)
        : String(payload);
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  uploadSystem(kind: 'aut' | 'pts', text: string): Promise<SystemInfo> {
    return this.request('POST', '/systems', { kind, text });
  }

  check(systemId: string, semantics: string, left: unknown, right: unknown,
        depth: number | string = 'limit'): Promise<{ verdict: Verdict }> {
    return this.request('POST', '/check', {
      system_id: systemId, semantics, left, right, depth,
    });
  }

  openSession(options: {
    systemId: string; semantics: string; left: unknown; right: unknown;
    rounds: number | 'infinite'; humanRole: 'spoiler' | 'duplicator' | null;
  }): Promise<SessionSnapshot> {
    return this.request('POST', '/sessions', {
      system_id: options.systemId,
      semantics: options.semantics,
      left: options.left,
      right: options.right,
      rounds: options.rounds,
      human_role: options.humanRole,
    });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request('GET', `/sessions/${sessionId}`);
  }

  submitRelation(sessionId: string, version: number,
                 claims: ClaimPair[]): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${sessionId}/move`, {
      version, kind: 'duplicator_relation', payload: claims,
    });
  }

  pickChallenge(sessionId: string, version: number,
                pair: ClaimPair): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${sessionId}/move`, {
      version, kind: 'spoiler_pick', payload: pair,
    });
  }

  requestEngineMove(sessionId: string, version: number): Promise<SessionSnapshot> {
    return this.request('POST', `/sessions/${sessionId}/move`, {
      version, kind: 'request_engine_move',
    });
  }

  replay(options: {
    systemId: string; semantics: string; left: unknown; right: unknown;
    rounds: number | 'infinite'; humanRole: 'spoiler' | 'duplicator' | null;
    transcript: unknown[];
  }): Promise<ReplayResult> {
    return this.request('POST', '/replay', {
      system_id: options.systemId,
      semantics: options.semantics,
      left: options.left,
      right: options.right,
      rounds: options.rounds,
      human_role: options.humanRole,
      transcript: options.transcript,
    });
  }
}

export function renderDetState(state: DetState): string {
  if (state.kind === 'single') return String(state.state);
  if (state.kind === 'set') return `{${state.states.join(',')}}`;
  return `{${state.weights.map(([s, w]) => `${s}:${w}`).join(', ')}}`;
}

export function detStateMembers(state: DetState): number[] {
  if (state.kind === 'single') return [state.state];
  if (state.kind === 'set') return [...state.states];
  return state.weights.map(([s]) => s);
}

export function sameDetState(a: DetState, b: DetState): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
