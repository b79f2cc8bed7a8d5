export { buildHandleDoc, buildHandleFrame } from "./frameBuilder.js";
export { CaptureSession } from "./captureSession.js";
export type { CaptureOptions, CaptureState } from "./captureSession.js";
export { OperatorPanel } from "./operatorPanel.js";
export type { PanelOptions, PanelView } from "./operatorPanel.js";
export { XREmulator } from "./xrEmulator.js";
export type { EmulatedXRFrame, InputSourceSample, XRSessionLike } from "./xrEmulator.js";
export { NodeControlTransport, NodeFrameTransport, controlRequest } from "./nodeTransport.js";
export type {
  ControlResponse,
  ControlTransport,
  FrameTransport,
  GatewayStatus,
  HandleDoc,
  HandleFrameDoc,
  PoseDoc,
} from "./types.js";
