// Client-side session mirror and pack-input parsing. The server owns the
// truth; this module exists so the page can validate input before a
// request and render without re-fetching after every keystroke.

import type { CardInfo, SessionState } from "./api.js";

/**
 * Parse a user-entered pack: comma or whitespace separated card ids or
 * exact card names (case-insensitive). Returns ids in entry order.
 * Throws with a readable message on the first bad token.
 */
export function parsePack(
  text: string,
  cards: readonly CardInfo[],
): number[] {
  const byName = new Map(
    cards.map((card) => [card.name.toLowerCase(), card.id]),
  );
  const ids: number[] = [];
  for (const token of text.split(/[,\n]/)) {
    const item = token.trim();
    if (!item) {
      continue;
    }
    if (/^\d+$/.test(item)) {
      const id = Number(item);
      if (id >= cards.length) {
        throw new Error(`unknown card id ${id}`);
      }
      ids.push(id);
      continue;
    }
    const byNameId = byName.get(item.toLowerCase());
    if (byNameId === undefined) {
      throw new Error(`unknown card "${item}"`);
    }
    ids.push(byNameId);
  }
  if (ids.length === 0) {
    throw new Error("enter at least one card");
  }
  return ids;
}

/** Uniform sample of `size` distinct card ids, for the demo pack button. */
export function samplePack(
  nCards: number,
  size: number,
  random: () => number = Math.random,
): number[] {
  if (size > nCards) {
    throw new Error(`cannot sample ${size} of ${nCards} cards`);
  }
  const pool = Array.from({ length: nCards }, (_, i) => i);
  for (let i = 0; i < size; i++) {
    const j = i + Math.floor(random() * (pool.length - i));
    [pool[i], pool[j]] = [pool[j], pool[i]];
  }
  return pool.slice(0, size);
}

export interface DraftView {
  session: string;
  model: string;
  anchorSize: number;
  pickCap: number;
  complete: boolean;
  pool: Map<number, number>;
  history: { pack: number[]; picked: number }[];
}

/** Build the view model from a session payload. */
export function viewFromSession(state: SessionState): DraftView {
  const pool = new Map<number, number>();
  for (const entry of state.pool) {
    pool.set(entry.card_id, entry.count);
  }
  return {
    session: state.session,
    model: state.model,
    anchorSize: state.anchor_size,
    pickCap: state.pick_cap,
    complete: state.complete,
    pool,
    history: state.history.map((h) => ({
      pack: [...h.pack],
      picked: h.picked,
    })),
  };
}

/**
 * Apply a confirmed pick locally, mirroring what the server just did.
 * Rejects picks the server would reject so the UI cannot drift.
 */
export function applyPick(
  view: DraftView,
  pack: number[],
  picked: number,
): DraftView {
  if (view.complete) {
    throw new Error("draft is complete; no picks remain");
  }
  if (!pack.includes(picked)) {
    throw new Error(`picked card ${picked} not in pack`);
  }
  const pool = new Map(view.pool);
  pool.set(picked, (pool.get(picked) ?? 0) + 1);
  const anchorSize = view.anchorSize + 1;
  return {
    ...view,
    anchorSize,
    complete: anchorSize >= view.pickCap,
    pool,
    history: [...view.history, { pack: [...pack], picked }],
  };
}
