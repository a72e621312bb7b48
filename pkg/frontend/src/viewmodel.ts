// View model derived purely from the latest server snapshot. The only
// client-side state is which candidate pairs the user has toggled into the
// claim under construction; admissibility always comes from the server.

import { renderDetState, sameDetState } from './api.js';
import type {
  ClaimPair, DetState, EngineHint, Phase, SessionSnapshot, TranscriptEvent,
} from './types.js';

export interface PaletteEntry {
  pair: ClaimPair;
  key: string;
  label: string;
  selected: boolean;
}

export function claimKey(pair: ClaimPair): string {
  return JSON.stringify([pair.left, pair.right, pair.dir ?? null]);
}

export function describePair(pair: ClaimPair): string {
  const rel = pair.dir === 'le' ? '≤' : pair.dir === 'ge' ? '≥' : '=';
  return `${renderDetState(pair.left)} ${rel} ${renderDetState(pair.right)}`;
}

export function describeEvent(event: TranscriptEvent): string {
  const move = event.move as Record<string, unknown>;
  const type = String(move.type);
  const who = event.actor === 'referee' ? '' : `${event.actor} (${move.by ?? '?'}) `;
  switch (type) {
    case 'start':
      return `game started: ${move.rounds} round(s), ${move.semantics}`;
    case 'relation': {
      const claims = move.claims as ClaimPair[];
      return `${who}claims ${claims.length ? claims.map(describePair).join('; ') : 'nothing'}`;
    }
    case 'rejected':
      return `${who}claim rejected: ${move.reason}`;
    case 'pick':
      return `${who}challenges ${describePair({
        left: move.left as DetState, right: move.right as DetState,
        dir: (move.dir as 'le' | 'ge' | null) ?? null,
      })}`;
    case 'resign':
      return `${who}resigns`;
    case 'finish':
      return `${move.winner} wins: ${move.reason}`;
    default:
      return `${who}${type}`;
  }
}

export class SessionViewModel {
  snapshot: SessionSnapshot;
  private selectedKeys = new Set<string>();

  constructor(snapshot: SessionSnapshot) {
    this.snapshot = snapshot;
  }

  /** Replace the snapshot (after any server round-trip). */
  update(snapshot: SessionSnapshot): void {
    const phaseChanged = snapshot.phase !== this.snapshot.phase
      || snapshot.round !== this.snapshot.round;
    this.snapshot = snapshot;
    if (phaseChanged) this.selectedKeys.clear();
  }

  get phase(): Phase {
    return this.snapshot.phase;
  }

  get version(): number {
    return this.snapshot.version;
  }

  get configLabel(): string {
    const { left, right, direction } = this.snapshot.config;
    const rel = direction === 'le' ? '≤' : direction === 'ge' ? '≥' : 'vs';
    return `${renderDetState(left)} ${rel} ${renderDetState(right)}`;
  }

  get roundLabel(): string {
    const left = this.snapshot.rounds_left;
    return left === 'infinite' ? 'infinite game' : `${left} round(s) left`;
  }

  get humanTurn(): boolean {
    const role = this.snapshot.human_role;
    if (!role || this.snapshot.phase === 'finished') return false;
    return (this.snapshot.phase === 'await_duplicator') === (role === 'duplicator');
  }

  get engineHint(): EngineHint | null {
    return this.snapshot.engine_hint ?? null;
  }

  /** Candidate palette with toggle state; selection survives re-renders. */
  palette(): PaletteEntry[] {
    return this.snapshot.candidate_pairs.map((pair) => {
      const key = claimKey(pair);
      return { pair, key, label: describePair(pair), selected: this.selectedKeys.has(key) };
    });
  }

  toggle(key: string): void {
    if (this.selectedKeys.has(key)) this.selectedKeys.delete(key);
    else this.selectedKeys.add(key);
  }

  /** The claim relation assembled so far (palette picks + free-form extras). */
  buildRelation(extras: ClaimPair[] = []): ClaimPair[] {
    const chosen = this.snapshot.candidate_pairs.filter(
      (pair) => this.selectedKeys.has(claimKey(pair)));
    const all = [...chosen];
    for (const extra of extras) {
      if (!all.some((p) => claimKey(p) === claimKey(extra))) all.push(extra);
    }
    return all;
  }

  pendingClaims(): ClaimPair[] {
    return this.snapshot.pending_relation ?? [];
  }

  transcriptLines(): string[] {
    return this.snapshot.transcript.map(describeEvent);
  }

  outcome(): { winner: string; reason: string } | null {
    if (this.snapshot.phase !== 'finished' || !this.snapshot.winner) return null;
    return { winner: this.snapshot.winner, reason: this.snapshot.reason ?? '' };
  }

  /** States to highlight on the system graph for the current configuration. */
  highlights(): { left: number[]; right: number[] } {
    const members = (s: DetState): number[] =>
      s.kind === 'single' ? [s.state]
        : s.kind === 'set' ? [...s.states]
          : s.weights.map(([x]) => x);
    return {
      left: members(this.snapshot.config.left),
      right: members(this.snapshot.config.right),
    };
  }
}

/** Parse a free-form claim such as "({1,3},{3})" or "({1},{2},le)". */
export function parseClaimExpression(text: string): ClaimPair[] {
  const claims: ClaimPair[] = [];
  for (const chunk of text.split(';').map((c) => c.trim()).filter(Boolean)) {
    if (!chunk.startsWith('(') || !chunk.endsWith(')')) {
      throw new Error(`claim must be parenthesized: ${chunk}`);
    }
    const inner = chunk.slice(1, -1);
    const parts: string[] = [];
    let depth = 0;
    let start = 0;
    for (let i = 0; i < inner.length; i += 1) {
      const ch = inner[i];
      if (ch === '{') depth += 1;
      else if (ch === '}') depth -= 1;
      else if (ch === ',' && depth === 0) {
        parts.push(inner.slice(start, i));
        start = i + 1;
      }
    }
    parts.push(inner.slice(start));
    const trimmed = parts.map((p) => p.trim());
    if (trimmed.length < 2 || trimmed.length > 3) {
      throw new Error(`claim needs 2 or 3 components: ${chunk}`);
    }
    const dir = trimmed.length === 3 ? trimmed[2] : null;
    if (dir !== null && dir !== 'le' && dir !== 'ge') {
      throw new Error(`direction must be 'le' or 'ge', got ${dir}`);
    }
    claims.push({
      left: parseDetStateExpression(trimmed[0]),
      right: parseDetStateExpression(trimmed[1]),
      dir: dir as 'le' | 'ge' | null,
    });
  }
  return claims;
}

export function parseDetStateExpression(text: string): DetState {
  const t = text.trim();
  if (!t) throw new Error('empty state expression');
  if (!t.startsWith('{')) {
    const n = Number(t);
    if (!Number.isInteger(n) || n < 0) throw new Error(`bad state index: ${t}`);
    return { kind: 'single', state: n };
  }
  if (!t.endsWith('}')) throw new Error(`unbalanced braces: ${t}`);
  const inner = t.slice(1, -1).trim();
  if (!inner) return { kind: 'set', states: [] };
  if (inner.includes(':')) {
    const weights: [number, string][] = inner.split(',').map((part) => {
      const [s, w] = part.split(':').map((x) => x.trim());
      const n = Number(s);
      if (!Number.isInteger(n) || !w) throw new Error(`bad distribution entry: ${part}`);
      return [n, w];
    });
    return { kind: 'dist', weights };
  }
  const states = inner.split(',').map((p) => {
    const n = Number(p.trim());
    if (!Number.isInteger(n) || n < 0) throw new Error(`bad state index: ${p}`);
    return n;
  });
  return { kind: 'set', states: [...new Set(states)].sort((a, b) => a - b) };
}

export { sameDetState };
