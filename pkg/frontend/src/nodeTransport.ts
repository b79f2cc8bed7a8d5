/**
 * Node transports for both gateway contracts.
 *
 * The frame channel is newline-delimited JSON over TCP (one document per
 * line). The control channel is one request line per command with a single
 * JSON line in response; one connection can carry many requests.
 */

import * as net from "node:net";

import type { ControlResponse, ControlTransport, FrameTransport } from "./types.js";

export class NodeFrameTransport implements FrameTransport {
  private socket: net.Socket | null = null;
  private disconnectHandlers: Array<() => void> = [];
  connected = false;

  constructor(
    private host: string,
    private port: number,
    private connectTimeoutMs = 3000
  ) {}

  connect(): Promise<void> {
    this.close();
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host: this.host, port: this.port });
      socket.setNoDelay(true);
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect to ${this.host}:${this.port} timed out`));
      }, this.connectTimeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        this.socket = socket;
        this.connected = true;
        socket.on("close", () => {
          this.connected = false;
          for (const handler of this.disconnectHandlers) handler();
        });
        socket.on("error", () => {
          /* surfaced via close */
        });
        resolve();
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(text: string): void {
    if (!this.socket || !this.connected) {
      throw new Error("not connected");
    }
    this.socket.write(text + "\n");
  }

  close(): void {
    if (this.socket) {
      this.socket.removeAllListeners("close");
      this.socket.destroy();
      this.socket = null;
    }
    this.connected = false;
  }

  onDisconnect(handler: () => void): void {
    this.disconnectHandlers.push(handler);
  }
}

/** One-shot control request over a fresh connection. */
export function controlRequest(
  host: string,
  port: number,
  command: string,
  timeoutMs = 5000
): Promise<ControlResponse> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host, port });
    let buffer = "";
    const timer = setTimeout(() => {
      socket.destroy();
      reject(new Error(`control request '${command}' timed out`));
    }, timeoutMs);
    socket.once("connect", () => socket.write(command.trim() + "\n"));
    socket.on("data", (chunk) => {
      buffer += chunk.toString("utf-8");
      const newline = buffer.indexOf("\n");
      if (newline >= 0) {
        clearTimeout(timer);
        socket.destroy();
        try {
          resolve(JSON.parse(buffer.slice(0, newline)) as ControlResponse);
        } catch (err) {
          reject(err);
        }
      }
    });
    socket.once("error", (err) => {
      clearTimeout(timer);
      reject(err);
    });
  });
}

export class NodeControlTransport implements ControlTransport {
  constructor(
    private host: string,
    private port: number,
    private timeoutMs = 5000
  ) {}

  request(command: string): Promise<ControlResponse> {
    return controlRequest(this.host, this.port, command, this.timeoutMs);
  }
}
