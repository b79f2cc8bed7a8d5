/**
 * Headless XR session emulator for tests and demos.
 *
 * Mirrors the slice of WebXR the capture loop relies on: a
 * requestAnimationFrame-style frame pump, per-frame input source sampling
 * (grip pose, target-ray pose, gamepad buttons/axes), and reference-space
 * loss, during which poses come back null exactly as a real runtime
 * reports them after tracking is lost.
 */

import type { ButtonStateDoc, Handedness, PoseDoc } from "./types.js";

export interface InputSourceSample {
  handedness: Handedness;
  profiles: string[];
  gripPose: PoseDoc | null;
  targetRayPose: PoseDoc | null;
  buttons: ButtonStateDoc[];
  axes: number[];
}

export interface EmulatedXRFrame {
  time: number;
  inputSources: InputSourceSample[];
}

export type FrameCallback = (frame: EmulatedXRFrame) => void;

export interface XRSessionLike {
  requestAnimationFrame(callback: FrameCallback): void;
  end(): void;
}

interface ControllerState {
  handedness: Handedness;
  profiles: string[];
  position: [number, number, number];
  orientation: [number, number, number, number];
  buttons: ButtonStateDoc[];
  axes: number[];
}

const DEFAULT_PROFILES = ["generic-trigger-squeeze-thumbstick"];

function defaultButtons(): ButtonStateDoc[] {
  return Array.from({ length: 7 }, () => ({ pressed: false, touched: false, value: 0 }));
}

export class XREmulator implements XRSessionLike {
  private controllers = new Map<Handedness, ControllerState>();
  private pending: FrameCallback[] = [];
  private time = 0;
  private ended = false;
  referenceSpaceValid = true;

  addController(handedness: Handedness, overrides: Partial<ControllerState> = {}): void {
    this.controllers.set(handedness, {
      handedness,
      profiles: overrides.profiles ?? [...DEFAULT_PROFILES],
      position: overrides.position ?? [0.1, 1.2, -0.3],
      orientation: overrides.orientation ?? [0, 0, 0, 1],
      buttons: overrides.buttons ?? defaultButtons(),
      axes: overrides.axes ?? [0, 0],
    });
  }

  removeController(handedness: Handedness): void {
    this.controllers.delete(handedness);
  }

  moveController(handedness: Handedness, position: [number, number, number]): void {
    const controller = this.controllers.get(handedness);
    if (controller) controller.position = position;
  }

  setButton(handedness: Handedness, index: number, state: Partial<ButtonStateDoc>): void {
    const controller = this.controllers.get(handedness);
    const button = controller?.buttons[index];
    if (button) Object.assign(button, state);
  }

  loseReferenceSpace(): void {
    this.referenceSpaceValid = false;
  }

  restoreReferenceSpace(): void {
    this.referenceSpaceValid = true;
  }

  requestAnimationFrame(callback: FrameCallback): void {
    if (!this.ended) this.pending.push(callback);
  }

  end(): void {
    this.ended = true;
    this.pending = [];
  }

  /** Advance the session by `count` frames of `dtMs` each. */
  pump(count = 1, dtMs = 1000 / 90): number {
    let delivered = 0;
    for (let i = 0; i < count && !this.ended; i++) {
      this.time += dtMs;
      const callbacks = this.pending;
      this.pending = [];
      const frame = this.sampleFrame();
      for (const callback of callbacks) {
        callback(frame);
        delivered++;
      }
    }
    return delivered;
  }

  private sampleFrame(): EmulatedXRFrame {
    const inputSources: InputSourceSample[] = [];
    for (const controller of this.controllers.values()) {
      const pose: PoseDoc | null = this.referenceSpaceValid
        ? {
            position: [...controller.position],
            orientation: [...controller.orientation],
          }
        : null;
      inputSources.push({
        handedness: controller.handedness,
        profiles: [...controller.profiles],
        gripPose: pose,
        targetRayPose: pose
          ? { position: [...pose.position], orientation: [...pose.orientation] }
          : null,
        buttons: controller.buttons.map((b) => ({ ...b })),
        axes: [...controller.axes],
      });
    }
    return { time: this.time, inputSources };
  }
}
