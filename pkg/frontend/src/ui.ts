// DOM application: upload a system, render it, start a session, play it.
// All rule decisions (admissibility, verdicts, winners) come from the
// service; this file only renders snapshots and posts moves.

import { ApiError, Client, detStateMembers, renderDetState } from './api.js';
import { layoutGraph } from './layout.js';
import {
  SessionViewModel, describePair, parseClaimExpression, parseDetStateExpression,
} from './viewmodel.js';
import type { ClaimPair, SessionSnapshot, SystemInfo, Witness } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

export class App {
  private client: Client;
  private system: SystemInfo | null = null;
  private vm: SessionViewModel | null = null;
  private sessionMeta: {
    left: unknown; right: unknown; rounds: number | 'infinite';
    humanRole: 'spoiler' | 'duplicator' | null; semantics: string;
  } | null = null;
  private highlighted: { left: number[]; right: number[] } = { left: [], right: [] };
  private hintVisible = false;
  private errorMessage = '';
  private checkResult = '';
  private replayTimer: ReturnType<typeof setTimeout> | null = null;
  replayTickMs = 400;

  constructor(private root: HTMLElement, client: Client) {
    this.client = client;
    this.render();
  }

  // -- helpers ------------------------------------------------------------

  private el<K extends keyof HTMLElementTagNameMap>(
    tag: K, attrs: Record<string, string> = {}, text = '',
  ): HTMLElementTagNameMap[K] {
    const node = this.root.ownerDocument.createElement(tag);
    for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
    if (text) node.textContent = text;
    return node;
  }

  private byTestId(id: string): HTMLElement | null {
    return this.root.querySelector(`[data-testid="${id}"]`);
  }

  private setError(message: string) {
    this.errorMessage = message;
    const box = this.byTestId('error-box');
    if (box) box.textContent = message;
  }

  // -- actions ------------------------------------------------------------

  async uploadSystem(kind: 'aut' | 'pts', text: string): Promise<void> {
    this.setError('');
    try {
      this.system = await this.client.uploadSystem(kind, text);
      this.vm = null;
      this.sessionMeta = null;
      this.highlighted = { left: [], right: [] };
      this.render();
    } catch (err) {
      this.setError(err instanceof Error ? err.message : String(err));
    }
  }

  async startSession(form: {
    semantics: string; left: string; right: string;
    rounds: string; role: 'spoiler' | 'duplicator' | 'none';
  }): Promise<void> {
    if (!this.system) return;
    this.setError('');
    try {
      const left = parseDetStateExpression(form.left);
      const right = parseDetStateExpression(form.right);
      const rounds = form.rounds === 'infinite' ? 'infinite' as const : Number(form.rounds);
      const humanRole = form.role === 'none' ? null : form.role;
      const snapshot = await this.client.openSession({
        systemId: this.system.system_id,
        semantics: form.semantics,
        left, right, rounds, humanRole,
      });
      this.sessionMeta = {
        left, right, rounds, humanRole, semantics: form.semantics,
      };
      this.vm = new SessionViewModel(snapshot);
      this.applySnapshot(snapshot);
    } catch (err) {
      this.setError(err instanceof Error ? err.message : String(err));
    }
  }

  private applySnapshot(snapshot: SessionSnapshot) {
    if (!this.vm) return;
    this.vm.update(snapshot);
    this.highlighted = this.vm.highlights();
    this.render();
  }

  private async move(action: () => Promise<SessionSnapshot>): Promise<void> {
    this.setError('');
    try {
      this.applySnapshot(await action());
    } catch (err) {
      if (err instanceof ApiError && this.vm) {
        // 422 carries the admissibility explanation; 409 means we are
        // stale. Either way, re-fetch so the view matches the server.
        this.setError(err.detail);
        const fresh = await this.client.getSession(this.vm.snapshot.session_id);
        this.applySnapshot(fresh);
      } else {
        this.setError(err instanceof Error ? err.message : String(err));
      }
    }
  }

  async submitClaim(extraText = ''): Promise<void> {
    if (!this.vm) return;
    let extras: ClaimPair[] = [];
    if (extraText.trim()) {
      try {
        extras = parseClaimExpression(extraText);
      } catch (err) {
        this.setError(err instanceof Error ? err.message : String(err));
        return;
      }
    }
    const claims = this.vm.buildRelation(extras);
    const { session_id: id } = this.vm.snapshot;
    await this.move(() => this.client.submitRelation(id, this.vm!.version, claims));
  }

  async pickPair(pair: ClaimPair): Promise<void> {
    if (!this.vm) return;
    const { session_id: id } = this.vm.snapshot;
    await this.move(() => this.client.pickChallenge(id, this.vm!.version, pair));
  }

  async engineMove(): Promise<void> {
    if (!this.vm) return;
    const { session_id: id } = this.vm.snapshot;
    await this.move(() => this.client.requestEngineMove(id, this.vm!.version));
  }

  togglePalette(key: string): void {
    this.vm?.toggle(key);
    this.render();
  }

  /** One-shot equivalence query for a pair; a distinguishing word-style
      witness is animated on the graph. */
  async checkPair(form: { semantics: string; left: string; right: string;
                          depth: string }): Promise<void> {
    if (!this.system) return;
    this.setError('');
    try {
      const left = parseDetStateExpression(form.left);
      const right = parseDetStateExpression(form.right);
      const depth = form.depth === 'limit' || form.depth === 'infinite'
        ? form.depth : Number(form.depth);
      const { verdict } = await this.client.check(
        this.system.system_id, form.semantics, left, right, depth);
      if (verdict.equivalent) {
        this.checkResult = verdict.kind === 'equivalent_limit'
          ? 'equivalent in the limit'
          : `equivalent up to depth ${verdict.depth}`;
        if (verdict.infinite_mode_degenerate) {
          this.checkResult += ' (degenerate infinite mode: Duplicator wins every position)';
        }
        this.highlighted = { left: detStateMembers(left), right: detStateMembers(right) };
      } else {
        const witness = verdict.witness;
        this.checkResult = `distinguished at depth ${verdict.depth}`;
        if (witness?.word !== undefined) {
          this.checkResult += witness.type === 'failure_pair'
            ? ` by failure pair (${witness.word.join(' ')}, {${(witness.refused ?? []).join(',')}})`
            : witness.type === 'word_probability'
              ? ` by word ${witness.word.join(' ')} (${witness.p_left} vs ${witness.p_right})`
              : ` by word ${witness.word.join(' ') || 'the empty word'}`;
          this.replayWitness(witness, detStateMembers(left), detStateMembers(right),
                             this.replayTickMs);
        }
      }
      this.render();
    } catch (err) {
      this.setError(err instanceof Error ? err.message : String(err));
    }
  }

  toggleHint(): void {
    this.hintVisible = !this.hintVisible;
    this.render();
  }

  /** Animate a word/failure witness: highlight the states reached after
      each prefix, stepping once per tick. */
  replayWitness(witness: Witness, fromLeft: number[], fromRight: number[],
                tickMs = 400): void {
    const word = witness.word ?? [];
    if (!this.system) return;
    const stepOnce = (states: number[], label: string): number[] => {
      const out = new Set<number>();
      for (const t of this.system!.transitions) {
        if (t.label === label && states.includes(t.src)) out.add(t.dst);
      }
      return [...out].sort((a, b) => a - b);
    };
    let left = fromLeft;
    let right = fromRight;
    let index = 0;
    const tick = () => {
      this.highlighted = { left, right };
      this.render();
      if (index >= word.length) {
        this.replayTimer = null;
        return;
      }
      left = stepOnce(left, word[index]);
      right = stepOnce(right, word[index]);
      index += 1;
      this.replayTimer = setTimeout(tick, tickMs);
    };
    if (this.replayTimer) clearTimeout(this.replayTimer);
    tick();
  }

  // -- rendering ----------------------------------------------------------

  render(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = '';
    const error = this.el('div', { 'data-testid': 'error-box', class: 'error' },
                          this.errorMessage);
    this.root.appendChild(error);
    this.root.appendChild(this.renderUploadPanel());
    if (this.system) {
      this.root.appendChild(this.renderGraph());
      this.root.appendChild(this.renderSessionForm());
    }
    if (this.vm) this.root.appendChild(this.renderBoard());
    void doc;
  }

  private renderUploadPanel(): HTMLElement {
    const panel = this.el('section', { class: 'panel', 'data-testid': 'upload-panel' });
    panel.appendChild(this.el('h2', {}, 'System'));
    const text = this.el('textarea', { 'data-testid': 'system-text', rows: '6' });
    const kind = this.el('select', { 'data-testid': 'system-kind' });
    for (const k of ['aut', 'pts']) kind.appendChild(this.el('option', { value: k }, k));
    const button = this.el('button', { 'data-testid': 'upload-button' }, 'Load system');
    button.addEventListener('click', () => {
      void this.uploadSystem(kind.value as 'aut' | 'pts', text.value);
    });
    panel.append(text, kind, button);
    if (this.system) {
      panel.appendChild(this.el(
        'div', { 'data-testid': 'system-summary' },
        `${this.system.num_states} states, alphabet {${this.system.alphabet.join(',')}}`,
      ));
    }
    return panel;
  }

  private renderGraph(): HTMLElement {
    const wrap = this.el('section', { class: 'panel', 'data-testid': 'graph-panel' });
    wrap.appendChild(this.el('h2', {}, 'Graph'));
    const system = this.system!;
    const nodes = layoutGraph(
      system.num_states,
      system.transitions.map((t) => ({ src: t.src, dst: t.dst })),
    );
    const svg = this.root.ownerDocument.createElementNS(SVG_NS, 'svg');
    svg.setAttribute('viewBox', '0 0 640 420');
    svg.setAttribute('width', '640');
    svg.setAttribute('height', '420');
    svg.setAttribute('data-testid', 'system-graph');
    for (const t of system.transitions) {
      const a = nodes[t.src];
      const b = nodes[t.dst];
      const edge = this.root.ownerDocument.createElementNS(SVG_NS, 'line');
      edge.setAttribute('x1', String(a.x));
      edge.setAttribute('y1', String(a.y));
      edge.setAttribute('x2', String(b.x));
      edge.setAttribute('y2', String(b.y));
      edge.setAttribute('stroke', '#888');
      svg.appendChild(edge);
      const label = this.root.ownerDocument.createElementNS(SVG_NS, 'text');
      label.setAttribute('x', String((a.x + b.x) / 2));
      label.setAttribute('y', String((a.y + b.y) / 2 - 4));
      label.setAttribute('class', 'edge-label');
      label.textContent = t.weight ? `${t.label} : ${t.weight}` : t.label;
      svg.appendChild(label);
    }
    for (const node of nodes) {
      const inLeft = this.highlighted.left.includes(node.id);
      const inRight = this.highlighted.right.includes(node.id);
      const circle = this.root.ownerDocument.createElementNS(SVG_NS, 'circle');
      circle.setAttribute('cx', String(node.x));
      circle.setAttribute('cy', String(node.y));
      circle.setAttribute('r', '16');
      circle.setAttribute('data-testid', `node-${node.id}`);
      circle.setAttribute('fill', inLeft && inRight ? '#b07ae0'
        : inLeft ? '#e0a87a' : inRight ? '#7ab0e0' : '#ddd');
      svg.appendChild(circle);
      const label = this.root.ownerDocument.createElementNS(SVG_NS, 'text');
      label.setAttribute('x', String(node.x));
      label.setAttribute('y', String(node.y + 4));
      label.setAttribute('text-anchor', 'middle');
      label.textContent = String(node.id);
      svg.appendChild(label);
    }
    wrap.appendChild(svg as unknown as HTMLElement);
    return wrap;
  }

  private renderSessionForm(): HTMLElement {
    const panel = this.el('section', { class: 'panel', 'data-testid': 'session-form' });
    panel.appendChild(this.el('h2', {}, 'New game'));
    const semantics = this.el('select', { 'data-testid': 'form-semantics' });
    for (const s of ['bisimilarity', 'trace', 'serial-trace',
                     'probabilistic-trace', 'simulation', 'failure']) {
      semantics.appendChild(this.el('option', { value: s }, s));
    }
    const left = this.el('input', { 'data-testid': 'form-left', placeholder: 'left, e.g. {0,2}' });
    const right = this.el('input', { 'data-testid': 'form-right', placeholder: 'right, e.g. {2,5}' });
    const rounds = this.el('input', { 'data-testid': 'form-rounds', value: '3' });
    const role = this.el('select', { 'data-testid': 'form-role' });
    for (const r of ['duplicator', 'spoiler', 'none']) {
      role.appendChild(this.el('option', { value: r }, r));
    }
    const start = this.el('button', { 'data-testid': 'start-button' }, 'Start session');
    start.addEventListener('click', () => {
      void this.startSession({
        semantics: semantics.value,
        left: left.value,
        right: right.value,
        rounds: rounds.value,
        role: role.value as 'spoiler' | 'duplicator' | 'none',
      });
    });
    const check = this.el('button', { 'data-testid': 'check-button' }, 'Check pair');
    check.addEventListener('click', () => {
      void this.checkPair({
        semantics: semantics.value,
        left: left.value,
        right: right.value,
        depth: 'limit',
      });
    });
    panel.append(semantics, left, right, rounds, role, start, check);
    if (this.checkResult) {
      panel.appendChild(this.el('div', { 'data-testid': 'check-verdict' },
                                this.checkResult));
    }
    return panel;
  }

  private renderBoard(): HTMLElement {
    const vm = this.vm!;
    const panel = this.el('section', { class: 'panel', 'data-testid': 'board' });
    panel.appendChild(this.el('h2', {}, 'Game'));
    panel.appendChild(this.el(
      'div', { 'data-testid': 'config' },
      `configuration: ${vm.configLabel} — ${vm.roundLabel} — ${vm.phase}`,
    ));

    const outcome = vm.outcome();
    if (outcome) {
      const banner = this.el(
        'div',
        { 'data-testid': 'winner-banner', class: `banner ${outcome.winner}` },
        `${outcome.winner === 'duplicator' ? 'Duplicator' : 'Spoiler'} wins: ${outcome.reason}`,
      );
      panel.appendChild(banner);
    } else if (vm.phase === 'await_duplicator') {
      panel.appendChild(this.renderDuplicatorControls());
    } else {
      panel.appendChild(this.renderSpoilerControls());
    }

    const hintButton = this.el('button', { 'data-testid': 'hint-toggle' },
      this.hintVisible ? 'Hide engine hint' : 'Show engine hint');
    hintButton.addEventListener('click', () => this.toggleHint());
    panel.appendChild(hintButton);
    if (this.hintVisible) {
      const hint = vm.engineHint;
      panel.appendChild(this.el(
        'div', { 'data-testid': 'hint-box' },
        hint === null ? 'no hint'
          : hint.kind === 'relation'
            ? (hint.resign ? 'engine would resign'
              : `engine would claim: ${(hint.claims ?? []).map(describePair).join('; ') || 'nothing'}`)
            : `engine would challenge ${describePair({ left: hint.left, right: hint.right, dir: hint.dir })}`,
      ));
    }

    const engineButton = this.el('button', { 'data-testid': 'engine-move' }, 'Engine move');
    engineButton.addEventListener('click', () => { void this.engineMove(); });
    if (!outcome && !vm.humanTurn) panel.appendChild(engineButton);

    const transcript = this.el('ol', { 'data-testid': 'transcript' });
    for (const line of vm.transcriptLines()) {
      transcript.appendChild(this.el('li', {}, line));
    }
    panel.appendChild(transcript);
    return panel;
  }

  private renderDuplicatorControls(): HTMLElement {
    const vm = this.vm!;
    const box = this.el('div', { 'data-testid': 'duplicator-controls' });
    box.appendChild(this.el('h3', {}, 'Duplicator: assemble a claimed relation'));
    const list = this.el('div', { 'data-testid': 'palette' });
    for (const entry of vm.palette()) {
      const button = this.el('button', {
        'data-testid': `palette-${entry.key}`,
        class: entry.selected ? 'pair selected' : 'pair',
        'data-key': entry.key,
      }, `${entry.selected ? '[x] ' : '[ ] '}${entry.label}`);
      button.addEventListener('click', () => this.togglePalette(entry.key));
      list.appendChild(button);
    }
    box.appendChild(list);
    const extra = this.el('input', {
      'data-testid': 'claim-extra',
      placeholder: 'extra claims, e.g. ({1,3},{3}); ({4,6},{4})',
    });
    const submit = this.el('button', { 'data-testid': 'submit-claim' }, 'Submit claim');
    submit.addEventListener('click', () => { void this.submitClaim(extra.value); });
    box.append(extra, submit);
    return box;
  }

  private renderSpoilerControls(): HTMLElement {
    const vm = this.vm!;
    const box = this.el('div', { 'data-testid': 'spoiler-controls' });
    box.appendChild(this.el('h3', {}, 'Spoiler: challenge a claimed pair'));
    vm.pendingClaims().forEach((pair, index) => {
      const button = this.el('button', {
        'data-testid': `challenge-${index}`,
        class: 'pair',
      }, describePair(pair));
      button.addEventListener('click', () => { void this.pickPair(pair); });
      box.appendChild(button);
    });
    return box;
  }
}

export { renderDetState, detStateMembers };
