// SVG scatter plot of the 2-d embedding projection, built as a plain
// string so it can be tested without a DOM.

import type { EmbeddingPoint } from "./api.js";
import { colorFor } from "./format.js";

export interface ScatterOptions {
  width?: number;
  height?: number;
  pad?: number;
  radius?: number;
}

interface Extent {
  min: number;
  max: number;
}

function extentOf(values: number[]): Extent {
  const min = Math.min(...values);
  const max = Math.max(...values);
  return { min, max };
}

/** Map a value into pixel space; a zero-width extent centers the points. */
export function scale(
  value: number,
  extent: Extent,
  pixels: number,
  pad: number,
): number {
  const span = extent.max - extent.min;
  if (span === 0) {
    return pad + (pixels - 2 * pad) / 2;
  }
  return pad + ((value - extent.min) / span) * (pixels - 2 * pad);
}

const LEGEND: [string, string][] = [
  ["W", "white"],
  ["U", "blue"],
  ["B", "black"],
  ["R", "red"],
  ["G", "green"],
  ["multicolor", "multicolor"],
  ["colorless", "colorless"],
];

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/**
 * Render embedding points as an SVG string. Each card is a circle colored
 * by its color identity, with the card name as a hover title. Only color
 * classes present in the data appear in the legend.
 */
export function scatterSvg(
  points: readonly EmbeddingPoint[],
  options: ScatterOptions = {},
): string {
  const width = options.width ?? 420;
  const height = options.height ?? 320;
  const pad = options.pad ?? 18;
  const radius = options.radius ?? 5;
  const parts: string[] = [
    `<svg viewBox="0 0 ${width} ${height}" role="img" aria-label="card embedding map">`,
  ];
  if (points.length > 0) {
    const xs = extentOf(points.map((p) => p.x));
    const ys = extentOf(points.map((p) => p.y));
    for (const point of points) {
      const cx = scale(point.x, xs, width, pad).toFixed(1);
      // SVG y runs downward; flip so larger y plots higher.
      const cy = (height - scale(point.y, ys, height, pad)).toFixed(1);
      const fill = colorFor(point.color_class);
      parts.push(
        `<circle cx="${cx}" cy="${cy}" r="${radius}" fill="${fill}" ` +
          `data-card="${point.card_id}"><title>` +
          `${escapeXml(point.name)} (${point.rarity})</title></circle>`,
      );
    }
    const present = new Set(points.map((p) => p.color_class));
    let ly = pad;
    for (const [colorClass, label] of LEGEND) {
      if (!present.has(colorClass)) {
        continue;
      }
      parts.push(
        `<circle cx="${width - pad - 64}" cy="${ly}" r="4" ` +
          `fill="${colorFor(colorClass)}"></circle>`,
        `<text x="${width - pad - 54}" y="${ly + 4}" class="legend">` +
          `${label}</text>`,
      );
      ly += 16;
    }
  }
  parts.push("</svg>");
  return parts.join("");
}
