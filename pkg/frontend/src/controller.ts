// Drives one composition session against the service. All mutations go
// through a FIFO queue, so at most one request chain is in flight and
// picks made while a request is pending apply in order.

import { ApiError, ServiceApi } from "./api.js";
import type { RecommendationEntry } from "./api.js";
import {
  clampK,
  initialState,
  refinedKey,
  withRecommendations,
  withServerSession,
  type UiSessionState,
} from "./state.js";

export type Listener = (state: UiSessionState) => void;

export class SessionController {
  state: UiSessionState = initialState();
  private queue: Promise<void> = Promise.resolve();
  private listeners: Listener[] = [];

  constructor(private api: ServiceApi, listener?: Listener) {
    if (listener) this.listeners.push(listener);
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(next: UiSessionState): void {
    this.state = next;
    for (const listener of this.listeners) listener(this.state);
  }

  private enqueue(action: () => Promise<void>): Promise<void> {
    this.queue = this.queue.then(action, action);
    return this.queue;
  }

  /** Create a fresh session and load the catalog for the first pick. */
  async start(): Promise<void> {
    this.emit({ ...this.state, busy: true });
    try {
      const health = await this.api.health();
      if (health.status !== "ok") {
        throw new ApiError(503, "service is still loading");
      }
      const [session, catalog] = await Promise.all([
        this.api.createSession(),
        this.api.catalog(),
      ]);
      this.emit({
        ...initialState(),
        sessionId: session.id,
        catalog,
        k: this.state.k,
        busy: false,
      });
    } catch (err) {
      this.emit({
        ...this.state,
        busy: false,
        banner: `service unreachable: ${describe(err)} (retry to reconnect)`,
      });
    }
  }

  /**
   * Select a recommended entry (optionally refined to a subset of its
   * bundle members) or a catalog token, then refresh recommendations.
   */
  pickEntry(
    entry: { token: string; members: string[] },
    refinedMembers?: string[],
  ): Promise<void> {
    return this.enqueue(() => this.doPick(entry, refinedMembers));
  }

  /** Re-fetch with a new k; the chain is untouched. */
  adjustK(k: number): Promise<void> {
    return this.enqueue(() => this.doAdjustK(k));
  }

  private async doPick(
    entry: { token: string; members: string[] },
    refinedMembers?: string[],
  ): Promise<void> {
    const sid = this.state.sessionId;
    if (!sid) return;
    let token = entry.token;
    if (refinedMembers && refinedMembers.length > 0) {
      const outside = refinedMembers.filter((m) => !entry.members.includes(m));
      if (outside.length > 0) {
        this.emit({
          ...this.state,
          notice: `refinement must pick members of ${entry.token}`,
        });
        return;
      }
      token = refinedKey(refinedMembers);
    }
    // A token outside the vocabulary would cold-start the next
    // recommendation; refuse it up front so the chain stays unchanged.
    if (!this.state.catalog.some((c) => c.token === token)) {
      this.emit({
        ...this.state,
        notice: `"${token}" is not in the trained vocabulary`,
      });
      return;
    }
    this.emit({ ...this.state, busy: true, notice: null });
    try {
      const view = await this.api.select(sid, token);
      const entries = await this.api.recommend(sid, this.state.k);
      this.emit({
        ...withRecommendations(withServerSession(this.state, view), entries),
        busy: false,
      });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Cold start: surface inline and resync the chain to the server.
        const view = await this.api.getSession(sid).catch(() => null);
        const synced = view ? withServerSession(this.state, view) : this.state;
        this.emit({ ...synced, busy: false, notice: err.message });
        return;
      }
      this.emit({ ...this.state, busy: false, banner: describe(err) });
    }
  }

  private async doAdjustK(k: number): Promise<void> {
    const { k: bounded, clamped } = clampK(k);
    const notice = clamped ? `k clamped to ${bounded}` : null;
    const sid = this.state.sessionId;
    if (!sid || this.state.chain.length === 0) {
      this.emit({ ...this.state, k: bounded, notice });
      return;
    }
    this.emit({ ...this.state, k: bounded, busy: true });
    try {
      const entries = await this.api.recommend(sid, bounded);
      this.emit({
        ...withRecommendations(this.state, entries),
        busy: false,
        notice,
      });
    } catch (err) {
      this.emit({ ...this.state, busy: false, notice: describe(err) });
    }
  }

  /** Read the session back from the server and compare with the chain. */
  async verifyChain(): Promise<boolean> {
    const sid = this.state.sessionId;
    if (!sid) return this.state.chain.length === 0;
    const view = await this.api.getSession(sid);
    return (
      view.selected.length === this.state.chain.length &&
      view.selected.every((t, i) => t.token === this.state.chain[i].token)
    );
  }

  topEntry(): RecommendationEntry | null {
    return this.state.lastRecommendations[0] ?? null;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.status}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
