import { GatewayClient, GatewayRequestError } from "./api";
import {
  allowedLabels, confirmDrafts, dropDraft, initialState, reduce, stageDraft,
} from "./state";
import type { Drafts, ViewState } from "./state";
import {
  renderChart, renderLabelCounts, renderLegend, renderNetwork, showBanner,
} from "./render";
import type { GatewayEvent, NodeLabel } from "./types";

/** Browser app shell: one session, one event subscription, optimistic
 *  drafts reconciled by intervention_applied events. */
export class ConsoleApp {
  state: ViewState = initialState();
  drafts: Drafts = new Map();
  private client: GatewayClient | null = null;
  private sessionId: string | null = null;

  constructor(private root: HTMLElement) {}

  mount(): void {
    this.root.innerHTML = `
      <div data-role="toolbar">
        <input data-role="gateway-url" value="http://127.0.0.1:8470" size="28">
        <textarea data-role="config" rows="6" cols="60"
          placeholder='{"topology": "...", "events": {...}, ...}'></textarea>
        <button data-role="create">create session</button>
        <button data-role="step" disabled>step window</button>
        <span data-role="session-status"></span>
      </div>
      <div data-role="legend"></div>
      <div data-role="map"></div>
      <div data-role="charts"></div>
    `;
    renderLegend(this.query("[data-role='legend']"));
    this.query("[data-role='create']").addEventListener("click", () => {
      void this.createSession();
    });
    this.query("[data-role='step']").addEventListener("click", () => {
      void this.stepWindow();
    });
  }

  private query<T extends HTMLElement = HTMLElement>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`missing element ${selector}`);
    return el;
  }

  applyEvents(events: GatewayEvent[]): void {
    for (const event of events) {
      this.state = reduce(this.state, event);
    }
    this.drafts = confirmDrafts(this.drafts, events);
    this.redraw();
  }

  redraw(): void {
    const stepButton = this.query<HTMLButtonElement>("[data-role='step']");
    stepButton.disabled = this.sessionId === null
      || this.state.status === "training" || this.state.status === "finished";
    this.query("[data-role='session-status']").textContent =
      this.sessionId
        ? `${this.sessionId} — ${this.state.status}, window ${this.state.windowIndex}`
        : "no session";
    if (this.state.snapshot) {
      renderNetwork(this.query("[data-role='map']"), this.state.snapshot,
                    this.drafts, { onNodeClick: (id) => this.promptMark(id) });
    }
    const charts = this.query("[data-role='charts']");
    renderChart(charts, "prediction-table delta", this.state.qoptDelta);
    renderChart(charts, "path cost", this.state.pathCost);
    renderLabelCounts(charts, this.state.labelCounts);
  }

  async createSession(): Promise<void> {
    const url = this.query<HTMLInputElement>("[data-role='gateway-url']").value;
    const configText = this.query<HTMLTextAreaElement>("[data-role='config']").value;
    try {
      const config = JSON.parse(configText);
      this.client = new GatewayClient(url);
      const created = await this.client.createSession(config);
      this.sessionId = created.id;
      this.state = initialState();
      this.drafts = new Map();
      // replay everything so far, then follow live
      const events = await this.client.readEvents(this.sessionId, -1, false);
      this.applyEvents(events);
      void this.follow();
    } catch (err) {
      showBanner(this.query("[data-role='map']"),
                 `session failed: ${(err as Error).message}`);
    }
  }

  private async follow(): Promise<void> {
    if (!this.client || !this.sessionId) return;
    try {
      await this.client.readEvents(
        this.sessionId, this.state.lastEventIndex, true,
        (event) => this.applyEvents([event]));
    } catch {
      // stream closes when the session finishes or the server goes away
    }
  }

  async stepWindow(): Promise<void> {
    if (!this.client || !this.sessionId) return;
    try {
      await this.client.step(this.sessionId);
    } catch (err) {
      if (err instanceof GatewayRequestError && err.code === "busy") {
        this.query<HTMLButtonElement>("[data-role='step']").disabled = true;
        return; // re-enabled by the next status_change event
      }
      showBanner(this.query("[data-role='map']"),
                 `step failed: ${(err as Error).message}`);
    }
  }

  promptMark(nodeId: number): void {
    const labels = allowedLabels(this.state.variant);
    const choice = window.prompt(
      `node ${nodeId}: label as one of ${labels.join(", ")}`, labels[0]);
    if (choice && labels.includes(choice as NodeLabel)) {
      void this.markNode(nodeId, choice as NodeLabel);
    }
  }

  async markNode(nodeId: number, label: NodeLabel): Promise<void> {
    if (!this.client || !this.sessionId) return;
    this.drafts = stageDraft(this.drafts, nodeId, label);
    this.redraw();
    try {
      await this.client.markNode(this.sessionId, nodeId, label);
      // still a draft: confirmed only by the intervention_applied event
    } catch (err) {
      this.drafts = dropDraft(this.drafts, nodeId);
      this.redraw();
      const reason = err instanceof GatewayRequestError
        ? `${err.code}: ${err.message}` : String(err);
      showBanner(this.query("[data-role='map']"), `mark rejected — ${reason}`);
    }
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new ConsoleApp(document.getElementById("app") as HTMLElement);
  app.mount();
}
