/**
 * Builds handle-channel frame documents from sampled XR input state.
 *
 * The client sends raw device-convention poses; all coordinate
 * harmonization happens in the gateway so there is exactly one transform
 * implementation in the system.
 */

import type { EmulatedXRFrame, InputSourceSample } from "./xrEmulator.js";
import type { HandleDoc, HandleFrameDoc } from "./types.js";

export function buildHandleDoc(source: InputSourceSample): HandleDoc | null {
  if (!source.gripPose) return null;
  const ray = source.targetRayPose ?? source.gripPose;
  return {
    id: source.handedness,
    handedness: source.handedness,
    profiles: [...source.profiles],
    buttons: source.buttons.map((b) => ({
      pressed: b.pressed,
      touched: b.touched,
      value: b.value,
    })),
    axes: [...source.axes],
    pose: {
      position: [...source.gripPose.position],
      orientation: [...source.gripPose.orientation],
    },
    targetRayPose: {
      position: [...ray.position],
      orientation: [...ray.orientation],
    },
  };
}

/**
 * One frame document per XR frame, or null when no tracked handle has a
 * valid pose (nothing to send).
 */
export function buildHandleFrame(
  frame: EmulatedXRFrame,
  timestampMs: number
): HandleFrameDoc | null {
  const data: HandleDoc[] = [];
  for (const source of frame.inputSources) {
    const doc = buildHandleDoc(source);
    if (doc) data.push(doc);
  }
  if (data.length === 0) return null;
  return { timestamp: Math.round(timestampMs), data };
}
