// Session controller: one service call per UI transition, serialised by
// an in-flight guard so rapid double-clicks cannot double-submit.
import { ApiClient, ServiceError } from "./api";
import { SessionView, WhatIf } from "./schema";

export type Listener = (state: ConsoleState) => void;

export interface ConsoleState {
  view: SessionView | null;
  whatif: WhatIf | null;
  busy: boolean;
  error: string | null;
  schemaBroken: boolean;
}

export class SessionController {
  private state: ConsoleState = {
    view: null,
    whatif: null,
    busy: false,
    error: null,
    schemaBroken: false,
  };
  private listeners: Listener[] = [];
  private inFlight = false;
  submittedSteps = 0;

  constructor(private api: ApiClient) {}

  snapshot(): ConsoleState {
    return { ...this.state };
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private emit(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  private fail(err: unknown): void {
    const e = err as ServiceError & { name?: string };
    if (e?.name === "ZodError") {
      this.emit({ busy: false, schemaBroken: true, error: "schema mismatch" });
    } else {
      this.emit({ busy: false, error: e?.message ?? String(err) });
    }
  }

  async create(config: Record<string, unknown>): Promise<void> {
    this.emit({ busy: true, error: null });
    try {
      const view = await this.api.createSession(config);
      this.emit({ view, whatif: null, busy: false });
    } catch (err) {
      this.fail(err);
    }
  }

  async refresh(): Promise<void> {
    const id = this.state.view?.id;
    if (!id) return;
    try {
      this.emit({ view: await this.api.getSession(id) });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Exactly one step request per confirmation; duplicates are dropped. */
  async submitDecision(choice: "recommended" | number): Promise<boolean> {
    const id = this.state.view?.id;
    if (!id || this.inFlight) return false;
    if (this.state.view?.status !== "awaiting_decision") return false;
    this.inFlight = true;
    this.submittedSteps += 1;
    this.emit({ busy: true, error: null });
    try {
      const view = await this.api.step(id, choice);
      this.emit({ view, whatif: null, busy: false });
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    } finally {
      this.inFlight = false;
    }
  }

  async pollWhatif(): Promise<void> {
    const view = this.state.view;
    if (!view || view.status !== "awaiting_decision") {
      this.emit({ whatif: null });
      return;
    }
    try {
      this.emit({ whatif: await this.api.whatif(view.id) });
    } catch (err) {
      const e = err as ServiceError;
      if (e?.status === 409) {
        this.emit({ whatif: null });  // wrong status: hide the panel
      } else {
        this.fail(err);
      }
    }
  }
}
