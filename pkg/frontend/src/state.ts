import { Api } from "./api.js";
import { EvalItem, NetworkError, Rate, Rubric, ServiceError } from "./types.js";

export type View =
  | { kind: "loading" }
  | { kind: "error"; message: string; code: string }
  | { kind: "rating"; item: EvalItem; rated: number; total: number }
  | { kind: "done"; rated: number; total: number };

/**
 * Session flow controller. The service log is the single source of
 * truth: this class never fabricates or mutates ratings locally — every
 * transition re-reads server state or applies an acknowledged response.
 */
export class SessionFlow {
  private view_: View = { kind: "loading" };
  private inFlight = false;
  rubric: Rubric | null = null;

  constructor(
    private readonly api: Api,
    readonly sessionId: string,
  ) {}

  get view(): View {
    return this.view_;
  }

  /** True while a rating request is outstanding; buttons disable on it. */
  get busy(): boolean {
    return this.inFlight;
  }

  async load(): Promise<View> {
    try {
      if (this.rubric === null) {
        this.rubric = await this.api.rubric();
      }
      const next = await this.api.next(this.sessionId);
      this.view_ = next.done
        ? { kind: "done", rated: next.rated, total: next.total }
        : { kind: "rating", item: next.item!, rated: next.rated, total: next.total };
    } catch (error) {
      this.view_ = this.toErrorView(error);
    }
    return this.view_;
  }

  /**
   * Submit a rating for the currently displayed item. While a submission
   * is in flight further calls are ignored, so a double-click records
   * exactly one rating. On AlreadyRated the state is refetched instead
   * of advancing locally.
   */
  async rate(rate: Rate): Promise<View> {
    if (this.inFlight || this.view_.kind !== "rating") {
      return this.view_;
    }
    const item = this.view_.item;
    this.inFlight = true;
    try {
      await this.api.rate(this.sessionId, item.item_id, rate);
      return await this.load();
    } catch (error) {
      if (error instanceof ServiceError && error.code === "AlreadyRated") {
        return await this.load();
      }
      if (error instanceof NetworkError) {
        // keep the pending item; the retry banner re-issues load()
        this.view_ = this.toErrorView(error);
        return this.view_;
      }
      this.view_ = this.toErrorView(error);
      return this.view_;
    } finally {
      this.inFlight = false;
    }
  }

  private toErrorView(error: unknown): View {
    if (error instanceof ServiceError) {
      return { kind: "error", message: `${error.code}: ${error.message}`, code: error.code };
    }
    if (error instanceof NetworkError) {
      return { kind: "error", message: error.message, code: "network" };
    }
    return { kind: "error", message: String(error), code: "unknown" };
  }
}
