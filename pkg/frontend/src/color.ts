/** Color scales.
 *
 * Stability changes use a diverging purple-to-yellow scale: deep purple for
 * the most negative (stabilizing) value, bright yellow for the most
 * positive (destabilizing) one, and a neutral midpoint pinned at exactly 0
 * regardless of how asymmetric the bounds are.  Chain position uses the
 * classic blue-to-red spectrum from first to last residue.
 */

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

export const PURPLE_END: Rgb = { r: 64, g: 0, b: 75 };
export const NEUTRAL_MID: Rgb = { r: 247, g: 247, b: 247 };
export const YELLOW_END: Rgb = { r: 255, g: 237, b: 0 };

export const N_TERMINUS_BLUE: Rgb = { r: 0, g: 0, b: 255 };
export const C_TERMINUS_RED: Rgb = { r: 255, g: 0, b: 0 };

export function rgbToHex(c: Rgb): string {
  const part = (v: number) => Math.round(v).toString(16).padStart(2, "0");
  return `#${part(c.r)}${part(c.g)}${part(c.b)}`;
}

function lerp(a: Rgb, b: Rgb, t: number): Rgb {
  return {
    r: a.r + (b.r - a.r) * t,
    g: a.g + (b.g - a.g) * t,
    b: a.b + (b.b - a.b) * t,
  };
}

export interface ScaleBounds {
  min: number;
  max: number;
}

export function scaleBounds(values: Iterable<number>): ScaleBounds {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!isFinite(min) || !isFinite(max)) throw new Error("empty scale domain");
  if (min > max) throw new Error("scale bounds inverted");
  return { min, max };
}

/** Diverging color for one stability-change value; 0 is always the neutral
 * midpoint, bounds.min the purple end, bounds.max the yellow end. */
export function divergingColor(value: number, bounds: ScaleBounds): string {
  if (bounds.min > 0 || bounds.max < 0) {
    // degenerate one-sided matrices still anchor the midpoint at zero
    bounds = { min: Math.min(bounds.min, 0), max: Math.max(bounds.max, 0) };
  }
  let rgb: Rgb;
  if (value === 0) {
    rgb = NEUTRAL_MID;
  } else if (value < 0) {
    const t = bounds.min === 0 ? 0 : Math.min(value / bounds.min, 1); // 1 at min
    rgb = lerp(NEUTRAL_MID, PURPLE_END, t);
  } else {
    const t = bounds.max === 0 ? 0 : Math.min(value / bounds.max, 1); // 1 at max
    rgb = lerp(NEUTRAL_MID, YELLOW_END, t);
  }
  return rgbToHex(rgb);
}

/** Spectrum color for residue `index` (1-based) of a chain of `length`:
 * blue at the first residue shading to red at the last. */
export function spectrumColor(index: number, length: number): string {
  const t = length <= 1 ? 0 : (index - 1) / (length - 1);
  return rgbToHex(lerp(N_TERMINUS_BLUE, C_TERMINUS_RED, t));
}
