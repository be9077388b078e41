// WebSocket connection wrapper: hello handshake, message decode, reconnect
// state. Socket callbacks only enqueue; consumers drain the queue on their
// own tick so network timing never blocks input capture or rendering.

import { ClientMessage, Difficulty, PROTOCOL_VERSION, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed" | "failed";

export class Connection {
  private socket: WebSocket | null = null;
  private queue: ServerMessage[] = [];
  status: ConnectionStatus = "connecting";

  constructor(private url: string) {}

  connect(player: string, difficulty: Difficulty): void {
    this.status = "connecting";
    this.socket = new WebSocket(this.url);
    this.socket.onopen = () => {
      this.status = "open";
      this.sendRaw({ v: PROTOCOL_VERSION, type: "hello", player, difficulty });
    };
    this.socket.onmessage = (ev: MessageEvent) => {
      try {
        this.queue.push(JSON.parse(ev.data as string) as ServerMessage);
      } catch {
        // non-JSON frame: drop
      }
    };
    this.socket.onclose = () => {
      this.status = this.status === "connecting" ? "failed" : "closed";
    };
    this.socket.onerror = () => {
      if (this.status === "connecting") this.status = "failed";
    };
  }

  drain(): ServerMessage[] {
    const out = this.queue;
    this.queue = [];
    return out;
  }

  sendRaw(msg: ClientMessage): void {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.socket?.close();
  }
}
