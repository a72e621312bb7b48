// Payload shapes of the eqgames HTTP API (see ../api/schema/*.json).

export type DetState =
  | { kind: 'single'; state: number }
  | { kind: 'set'; states: number[] }
  | { kind: 'dist'; weights: [number, string][] };

export type Direction = 'le' | 'ge' | null;

export interface ClaimPair {
  left: DetState;
  right: DetState;
  dir: Direction;
}

export interface SystemInfo {
  system_id: string;
  kind: 'aut' | 'pts';
  num_states: number;
  alphabet: string[];
  initial: number;
  transitions: { src: number; label: string; dst: number; weight?: string }[];
}

export interface Witness {
  type: 'word' | 'word_probability' | 'failure_pair' | 'move_tree' | 'simulation_chain';
  word?: string[];
  p_left?: string;
  p_right?: string;
  refused?: string[];
  direction?: string;
  steps?: { label: string; challenger: number; responder: number | null }[];
  tree?: unknown;
}

export interface Verdict {
  kind: 'equivalent_up_to' | 'equivalent_limit' | 'distinguished';
  equivalent: boolean;
  depth: number | null;
  witness: Witness | null;
  infinite_mode_degenerate: boolean;
}

export interface TranscriptEvent {
  round: number;
  actor: 'duplicator' | 'spoiler' | 'referee';
  move: Record<string, unknown>;
  config: { left: DetState; right: DetState; direction?: Direction };
}

export type Phase = 'await_duplicator' | 'await_spoiler' | 'finished';

export interface SessionSnapshot {
  session_id: string;
  semantics: string;
  config: { left: DetState; right: DetState; direction: Direction };
  phase: Phase;
  rounds: number | 'infinite';
  rounds_left: number | 'infinite';
  round: number;
  human_role: 'spoiler' | 'duplicator' | null;
  strikes: number;
  winner: 'spoiler' | 'duplicator' | null;
  reason: string | null;
  pending_relation: ClaimPair[] | null;
  candidate_pairs: ClaimPair[];
  transcript: TranscriptEvent[];
  version: number;
  engine_hint?: EngineHint | null;
}

export type EngineHint =
  | { kind: 'relation'; claims: ClaimPair[] | null; resign: boolean }
  | { kind: 'pick'; left: DetState; right: DetState; dir: Direction };

export interface ReplayResult {
  accepted: boolean;
  winner: string;
  reason: string;
  transcript: TranscriptEvent[];
}
