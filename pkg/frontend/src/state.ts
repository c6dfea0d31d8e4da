// UI session state and the pure helpers that evolve it. The chain must
// mirror the server session after every acknowledged action, so state
// transitions always rebuild the chain from a server payload instead of
// patching it locally.

import type { CatalogEntry, RecommendationEntry, SessionToken, SessionView } from "./api.js";

export const K_MIN = 1;
export const K_MAX = 50;
export const DEFAULT_K = 5;

export interface UiSessionState {
  sessionId: string | null;
  chain: SessionToken[];
  lastRecommendations: RecommendationEntry[];
  catalog: CatalogEntry[];
  k: number;
  banner: string | null; // blocking failure (service unreachable)
  notice: string | null; // inline, non-blocking
  busy: boolean;
}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    chain: [],
    lastRecommendations: [],
    catalog: [],
    k: DEFAULT_K,
    banner: null,
    notice: null,
    busy: false,
  };
}

export function clampK(k: number): { k: number; clamped: boolean } {
  if (!Number.isFinite(k)) return { k: DEFAULT_K, clamped: true };
  const bounded = Math.min(K_MAX, Math.max(K_MIN, Math.round(k)));
  return { k: bounded, clamped: bounded !== k };
}

export function withServerSession(
  state: UiSessionState,
  view: SessionView,
): UiSessionState {
  return { ...state, sessionId: view.id, chain: view.selected };
}

export function withRecommendations(
  state: UiSessionState,
  entries: RecommendationEntry[],
): UiSessionState {
  // Entries stay exactly in server rank order; no client-side sorting.
  return { ...state, lastRecommendations: entries, notice: null };
}

// The canonical key of a refined bundle selection: members sorted and
// '&'-joined, matching the server's token identity.
export function refinedKey(members: string[]): string {
  return [...members].sort().join("&");
}

export function chainEqualsServer(state: UiSessionState, view: SessionView): boolean {
  if (state.chain.length !== view.selected.length) return false;
  return state.chain.every((item, i) => item.token === view.selected[i].token);
}
