/** Decode a map snapshot into grayscale RGBA pixels for a canvas. */

import type { MapSnapshot } from "./types.js";

export const MAP_SNAPSHOT_FORMAT = "smartcloud-map/1";

export class MapDecodeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MapDecodeError";
  }
}

export interface GrayImage {
  width: number;
  height: number;
  /** RGBA, row-major, row 0 = map row 0 (origin row). */
  pixels: Uint8ClampedArray<ArrayBuffer>;
}

function decodeBase64(text: string): Uint8Array {
  let binary: string;
  try {
    binary = atob(text);
  } catch {
    throw new MapDecodeError("cells field is not valid base64");
  }
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  return bytes;
}

/** Occupied cells (probability 1) render black, free cells white. */
export function decodeMapGray(snapshot: MapSnapshot): GrayImage {
  if (snapshot.format !== MAP_SNAPSHOT_FORMAT) {
    throw new MapDecodeError(`unsupported map format ${JSON.stringify(snapshot.format)}`);
  }
  const { width, height } = snapshot;
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new MapDecodeError(`bad dimensions ${width}x${height}`);
  }
  const cells = decodeBase64(snapshot.cells);
  if (cells.length !== width * height) {
    throw new MapDecodeError(
      `cell payload holds ${cells.length} bytes, expected ${width * height}`,
    );
  }
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < cells.length; i++) {
    const gray = 255 - cells[i];
    pixels[i * 4] = gray;
    pixels[i * 4 + 1] = gray;
    pixels[i * 4 + 2] = gray;
    pixels[i * 4 + 3] = 255;
  }
  return { width, height, pixels };
}
