// WebSocket wiring: messages in arrival order, gestures out.

import { ClientMessage, ServerMessage } from "./protocol";

export class SessionClient {
  private ws: WebSocket | null = null;
  private url: string;
  onMessage: (msg: ServerMessage) => void;
  onClose: (reason: string) => void;

  constructor(url: string, onMessage: (msg: ServerMessage) => void,
              onClose: (reason: string) => void = () => undefined) {
    this.url = url;
    this.onMessage = onMessage;
    this.onClose = onClose;
  }

  connect(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => this.send({ type: "start" });
    this.ws.onmessage = (event) => {
      this.onMessage(JSON.parse(event.data as string) as ServerMessage);
    };
    this.ws.onclose = (event) => this.onClose(event.reason || "closed");
  }

  send(msg: ClientMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }
}
