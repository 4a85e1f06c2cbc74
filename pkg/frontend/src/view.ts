import { Api } from "./api.js";
import { SessionFlow, View } from "./state.js";
import { buildSummaryBars } from "./summary.js";
import { Rate, RATES, Rubric, Summary } from "./types.js";

const RATE_KEYS: Record<string, Rate> = { "1": "A", "2": "B", "3": "C", "4": "D" };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Renders the session flow into a root element and owns its events. */
export class App {
  constructor(
    private readonly root: HTMLElement,
    private readonly flow: SessionFlow,
    private readonly api: Api,
  ) {}

  async start(): Promise<void> {
    document.addEventListener("keydown", (event) => {
      const rate = RATE_KEYS[event.key];
      if (rate && this.flow.view.kind === "rating" && !this.flow.busy) {
        void this.submit(rate);
      }
    });
    await this.flow.load();
    await this.render();
  }

  async submit(rate: Rate): Promise<void> {
    await this.flow.rate(rate);
    await this.render();
  }

  async render(): Promise<void> {
    const view = this.flow.view;
    this.root.replaceChildren();
    switch (view.kind) {
      case "loading":
        this.root.append(el("p", "status", "Loading session..."));
        break;
      case "error":
        this.renderError(view);
        break;
      case "rating":
        this.renderRating(view);
        break;
      case "done": {
        this.root.append(el("p", "status", `Session complete: ${view.rated} / ${view.total} rated.`));
        try {
          const summary = await this.api.summary();
          this.renderSummary(summary);
        } catch {
          this.root.append(el("p", "status empty", "No ratings recorded yet."));
        }
        break;
      }
    }
  }

  private renderError(view: Extract<View, { kind: "error" }>): void {
    const banner = el("div", "banner error");
    banner.append(el("p", undefined, view.message));
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", () => {
      void this.flow.load().then(() => this.render());
    });
    banner.append(retry);
    this.root.append(banner);
  }

  private renderRating(view: Extract<View, { kind: "rating" }>): void {
    const progress = el("p", "progress", `${view.rated} / ${view.total} rated`);
    progress.setAttribute("data-testid", "progress");
    this.root.append(progress);

    const card = el("section", "item-card");
    card.append(el("h2", undefined, `${view.item.task_label} — ${view.item.model_label}`));
    card.append(el("h3", undefined, "Source"));
    card.append(el("p", "source", view.item.source));
    card.append(el("h3", undefined, "Rationale"));
    // pre-wrapped monospace keeps the generation's line structure,
    // including any marker lines, exactly as produced
    card.append(el("pre", "rationale", view.item.rationale));
    card.append(el("h3", undefined, "Transferred text"));
    card.append(el("p", "transferred", view.item.transferred));
    this.root.append(card);

    const controls = el("div", "rate-buttons");
    for (const rate of RATES) {
      const button = el("button", `rate rate-${rate}`, `Rate ${rate}`);
      button.setAttribute("data-rate", rate);
      button.title = this.criteriaFor(rate);
      button.addEventListener("click", () => {
        if (this.flow.busy) return;
        controls.querySelectorAll("button").forEach((b) => (b.disabled = true));
        void this.submit(rate);
      });
      controls.append(button);
    }
    this.root.append(controls);
    this.root.append(el("p", "hint", "Keys 1-4 rate A-D. Hover a button for the rubric."));
  }

  private criteriaFor(rate: Rate): string {
    const rubric: Rubric | null = this.flow.rubric;
    const level = rubric?.levels.find((lv) => lv.label === rate);
    return level ? level.criteria : "";
  }

  renderSummary(summary: Summary): void {
    const section = el("section", "summary");
    section.setAttribute("data-testid", "summary");
    section.append(el("h2", undefined, "Rating distribution"));
    section.append(
      el(
        "p",
        "acceptable",
        `Acceptable (A or B): ${(summary.acceptable_rate * 100).toFixed(0)}% of ${summary.total}`,
      ),
    );
    for (const bar of buildSummaryBars(summary.groups)) {
      const row = el("div", "bar-row");
      row.append(el("span", "bar-label", bar.label));
      const track = el("div", "bar-track");
      for (const segment of bar.segments) {
        const div = el("div", `bar-segment seg-${segment.rate}`, `${segment.count}`);
        div.style.width = `${(segment.width * 100).toFixed(2)}%`;
        div.setAttribute("data-rate", segment.rate);
        div.setAttribute("data-count", String(segment.count));
        track.append(div);
      }
      row.append(track);
      row.append(el("span", "bar-total", `${bar.total}`));
      section.append(row);
    }
    this.root.append(section);
  }
}
