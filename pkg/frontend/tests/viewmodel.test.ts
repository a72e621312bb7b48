import { describe, expect, it } from 'vitest';

import {
  SessionViewModel, claimKey, describeEvent, describePair,
  parseClaimExpression, parseDetStateExpression,
} from '../src/viewmodel.js';
import type { ClaimPair, SessionSnapshot } from '../src/types.js';

const set = (...states: number[]) => ({ kind: 'set' as const, states });

function snapshot(partial: Partial<SessionSnapshot> = {}): SessionSnapshot {
  return {
    session_id: 'g1',
    semantics: 'trace',
    config: { left: set(0, 2), right: set(2, 5), direction: null },
    phase: 'await_duplicator',
    rounds: 3,
    rounds_left: 3,
    round: 0,
    human_role: 'duplicator',
    strikes: 0,
    winner: null,
    reason: null,
    pending_relation: null,
    candidate_pairs: [
      { left: set(1, 3), right: set(3), dir: null },
      { left: set(4), right: set(4, 6), dir: null },
    ],
    transcript: [{
      round: 0,
      actor: 'referee',
      move: { type: 'start', rounds: 3, semantics: 'trace' },
      config: { left: set(0, 2), right: set(2, 5) },
    }],
    version: 0,
    engine_hint: null,
    ...partial,
  };
}

describe('parseDetStateExpression', () => {
  it('parses singletons, sets and distributions', () => {
    expect(parseDetStateExpression('5')).toEqual({ kind: 'single', state: 5 });
    expect(parseDetStateExpression('{}')).toEqual({ kind: 'set', states: [] });
    expect(parseDetStateExpression('{2,0,2}')).toEqual({ kind: 'set', states: [0, 2] });
    expect(parseDetStateExpression('{0:1/2, 1:1/2}')).toEqual({
      kind: 'dist', weights: [[0, '1/2'], [1, '1/2']],
    });
  });

  it('rejects garbage', () => {
    expect(() => parseDetStateExpression('')).toThrow();
    expect(() => parseDetStateExpression('{1,2')).toThrow();
    expect(() => parseDetStateExpression('x')).toThrow();
  });
});

describe('parseClaimExpression', () => {
  it('parses pairs and direction tags', () => {
    const claims = parseClaimExpression('({1,3},{3}); ({1},{2},le)');
    expect(claims).toHaveLength(2);
    expect(claims[0]).toEqual({ left: set(1, 3), right: set(3), dir: null });
    expect(claims[1].dir).toBe('le');
  });

  it('rejects malformed claims', () => {
    expect(() => parseClaimExpression('{1},{2}')).toThrow(/parenthesized/);
    expect(() => parseClaimExpression('({1},{2},up)')).toThrow(/direction/);
  });
});

describe('SessionViewModel', () => {
  it('builds the claim from toggled palette entries', () => {
    const vm = new SessionViewModel(snapshot());
    expect(vm.buildRelation()).toEqual([]);
    const entries = vm.palette();
    expect(entries.map((e) => e.label)).toEqual(['{1,3} = {3}', '{4} = {4,6}']);
    vm.toggle(entries[0].key);
    vm.toggle(entries[1].key);
    expect(vm.buildRelation()).toHaveLength(2);
    vm.toggle(entries[1].key);
    expect(vm.buildRelation()).toEqual([entries[0].pair]);
  });

  it('merges free-form extras without duplicates', () => {
    const vm = new SessionViewModel(snapshot());
    const entries = vm.palette();
    vm.toggle(entries[0].key);
    const extra: ClaimPair = { left: set(1, 3), right: set(3), dir: null };
    expect(vm.buildRelation([extra])).toHaveLength(1);
    const fresh: ClaimPair = { left: set(9), right: set(9), dir: null };
    expect(vm.buildRelation([fresh])).toHaveLength(2);
  });

  it('clears the selection when the round advances', () => {
    const vm = new SessionViewModel(snapshot());
    vm.toggle(vm.palette()[0].key);
    vm.update(snapshot({ round: 1, version: 2 }));
    expect(vm.buildRelation()).toEqual([]);
  });

  it('knows whose turn it is', () => {
    const vm = new SessionViewModel(snapshot());
    expect(vm.humanTurn).toBe(true);
    vm.update(snapshot({ phase: 'await_spoiler' }));
    expect(vm.humanTurn).toBe(false);
    vm.update(snapshot({ phase: 'await_spoiler', human_role: 'spoiler' }));
    expect(vm.humanTurn).toBe(true);
  });

  it('reports outcome and highlights from the snapshot only', () => {
    const vm = new SessionViewModel(snapshot({
      phase: 'finished', winner: 'duplicator', reason: 'spoiler stuck',
    }));
    expect(vm.outcome()).toEqual({ winner: 'duplicator', reason: 'spoiler stuck' });
    expect(vm.highlights()).toEqual({ left: [0, 2], right: [2, 5] });
  });
});

describe('describe helpers', () => {
  it('renders pairs with direction glyphs', () => {
    expect(describePair({ left: set(1), right: set(2), dir: 'le' })).toContain('≤');
    expect(describePair({ left: set(1), right: set(2), dir: null })).toContain('=');
  });

  it('renders transcript events', () => {
    const lines = new SessionViewModel(snapshot()).transcriptLines();
    expect(lines[0]).toMatch(/game started: 3 round/);
    expect(describeEvent({
      round: 1,
      actor: 'spoiler',
      move: { type: 'pick', by: 'engine', left: set(1, 3), right: set(3), dir: null },
      config: { left: set(1, 3), right: set(3) },
    })).toContain('challenges {1,3} = {3}');
  });

  it('claim keys are stable and distinct', () => {
    const a: ClaimPair = { left: set(1), right: set(2), dir: null };
    const b: ClaimPair = { left: set(1), right: set(2), dir: 'le' };
    expect(claimKey(a)).not.toBe(claimKey(b));
    expect(claimKey(a)).toBe(claimKey({ ...a }));
  });
});
