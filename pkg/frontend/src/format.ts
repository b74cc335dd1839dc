// Small pure helpers shared by the page and the scatter plot.

import type { CardInfo, RankedCard } from "./api.js";

/** Display color for a card's color identity. */
export function colorFor(colorClass: string): string {
  switch (colorClass) {
    case "W":
      return "#d8c97a";
    case "U":
      return "#4a90d9";
    case "B":
      return "#6b5b73";
    case "R":
      return "#d9534f";
    case "G":
      return "#5cb85c";
    case "multicolor":
      return "#c9a227";
    default:
      return "#9aa0a6"; // colorless
  }
}

/** One-letter rarity tag: common -> C, mythic -> M, ... */
export function rarityTag(rarity: string): string {
  return rarity ? rarity[0].toUpperCase() : "?";
}

export function formatDistance(distance: number): string {
  return distance.toFixed(4);
}

/**
 * Bar widths for a ranked list, in [0, 1], longest bar for the closest
 * card: 1 - distance/max. Display-only; the ordering is the ranking.
 */
export function barWidths(ranked: readonly RankedCard[]): number[] {
  if (ranked.length === 0) {
    return [];
  }
  const max = Math.max(...ranked.map((r) => r.distance));
  if (max <= 0) {
    return ranked.map(() => 1);
  }
  return ranked.map((r) => 1 - r.distance / max);
}

/** "3, 17" style label for a pool entry count. */
export function countSuffix(count: number): string {
  return count > 1 ? ` x${count}` : "";
}

/** Map of card id to card for quick lookups. */
export function cardIndex(cards: readonly CardInfo[]): Map<number, CardInfo> {
  return new Map(cards.map((card) => [card.id, card]));
}

/** "7 / 45 picks" progress label. */
export function progressLabel(anchorSize: number, pickCap: number): string {
  return `${anchorSize} / ${pickCap} picks`;
}
