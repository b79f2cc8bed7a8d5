/** Wire and view-model types shared across the capture client and panel. */

export type Handedness = "left" | "right";

export interface PoseDoc {
  position: [number, number, number];
  orientation: [number, number, number, number];
}

export interface ButtonStateDoc {
  pressed: boolean;
  touched: boolean;
  value: number;
}

export interface HandleDoc {
  id: string;
  handedness: Handedness;
  profiles: string[];
  buttons: ButtonStateDoc[];
  axes: number[];
  pose: PoseDoc;
  targetRayPose: PoseDoc;
}

/** One handle-channel message: the root frame document. */
export interface HandleFrameDoc {
  timestamp: number;
  data: HandleDoc[];
}

export interface StreamStatus {
  receive_hz: number;
  processed: number;
  acceptance_ratio: number;
  [key: string]: unknown;
}

export interface GatewayStatus {
  uptime_s: number;
  recording: { state: "idle" } | { state: "recording"; episode_id: string };
  streams: { gesture: StreamStatus; handle: StreamStatus };
  [key: string]: unknown;
}

export interface ControlResponse<T = unknown> {
  ok: boolean;
  result?: T;
  error?: string;
}

/** Minimal transport for the frame channel: one JSON document per send. */
export interface FrameTransport {
  connect(): Promise<void>;
  send(text: string): void;
  close(): void;
  readonly connected: boolean;
  onDisconnect(handler: () => void): void;
}

/** Minimal request/response client for the control channel. */
export interface ControlTransport {
  request(command: string): Promise<ControlResponse>;
}
