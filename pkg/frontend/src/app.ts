/** Application shell: owns mutable state, wires panels to the API client.
 * Every render is a pure function of (API data, in-flight form state), so a
 * reload reproduces the same view. */

import { ApiClient, ApiError, type RecordSummary } from "./api.js";
import {
  emptyForm,
  markReviewed,
  sortQueue,
  step,
  validateForm,
  type FormState,
} from "./state.js";
import {
  renderBanner,
  renderDetail,
  renderExclusions,
  renderForm,
  renderQueue,
} from "./views.js";

interface AppElements {
  banner: HTMLElement;
  queue: HTMLElement;
  detail: HTMLElement;
  form: HTMLElement;
  exclusions: HTMLElement;
}

export class App {
  private records: RecordSummary[] = [];
  private selectedId: string | null = null;
  private form: FormState = emptyForm();
  private submitting = false;

  constructor(
    private api: ApiClient,
    private elements: AppElements,
  ) {}

  async start(): Promise<void> {
    document.addEventListener("keydown", (ev) => {
      if (ev.target instanceof HTMLTextAreaElement) return;
      if (ev.key === "j") void this.select(step(this.records, this.selectedId, +1));
      if (ev.key === "k") void this.select(step(this.records, this.selectedId, -1));
    });
    await this.reload();
  }

  async reload(): Promise<void> {
    try {
      const page = await this.api.listAnomalies();
      this.records = sortQueue(page.records);
      renderBanner(this.elements.banner, null);
    } catch {
      renderBanner(this.elements.banner, "service unreachable", () => void this.reload());
      return;
    }
    this.renderQueuePanel();
    await this.refreshExclusions();
    if (this.selectedId === null && this.records.length > 0) {
      await this.select(this.records[0].record_id);
    } else if (this.selectedId !== null) {
      await this.select(this.selectedId);
    }
  }

  private renderQueuePanel(): void {
    renderQueue(this.elements.queue, this.records, this.selectedId, (id) => void this.select(id));
  }

  async select(recordId: string | null): Promise<void> {
    if (recordId === null) return;
    this.selectedId = recordId;
    this.form = emptyForm();
    this.renderQueuePanel();
    await this.refreshDetail();
  }

  private async refreshDetail(): Promise<void> {
    if (this.selectedId === null) return;
    try {
      const detail = await this.api.getDetail(this.selectedId);
      renderDetail(this.elements.detail, detail);
      renderForm(this.elements.form, this.form, this.submitting || detail.label !== null, {
        onChange: (patch) => this.patchForm(patch),
        onSubmit: () => void this.submit(),
      });
      renderBanner(this.elements.banner, null);
    } catch {
      renderBanner(this.elements.banner, "failed to load record", () => void this.refreshDetail());
    }
  }

  private patchForm(patch: Partial<FormState>): void {
    this.form = { ...this.form, ...patch };
    renderForm(this.elements.form, this.form, this.submitting, {
      onChange: (p) => this.patchForm(p),
      onSubmit: () => void this.submit(),
    });
  }

  async submit(): Promise<void> {
    if (this.selectedId === null || this.submitting) return;
    const missing = validateForm(this.form);
    if (missing !== null) {
      renderBanner(this.elements.banner, `missing field: ${missing}`);
      return;
    }
    this.submitting = true;
    try {
      await this.api.submitReview(this.selectedId, {
        verdict: this.form.verdict,
        reason: this.form.reason,
        note: this.form.note,
        exclusion_scope: this.form.scope,
      });
      this.records = markReviewed(this.records, this.selectedId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone (or a double-click) got there first: the stored label wins
        this.records = markReviewed(this.records, this.selectedId);
        renderBanner(this.elements.banner, "record was already reviewed; showing stored label");
      } else if (err instanceof ApiError && err.status === 422) {
        renderBanner(this.elements.banner, `rejected: ${err.message}`);
        this.submitting = false;
        return;
      } else {
        renderBanner(this.elements.banner, "submit failed", () => void this.submit());
        this.submitting = false;
        return;
      }
    }
    this.submitting = false;
    this.renderQueuePanel();
    await this.refreshDetail();
    await this.refreshExclusions();
  }

  private async refreshExclusions(): Promise<void> {
    try {
      const { exclusions } = await this.api.listExclusions();
      renderExclusions(this.elements.exclusions, exclusions, (id) => void this.removeExclusion(id));
    } catch {
      /* panel keeps its previous contents; the banner already reports outages */
    }
  }

  private async removeExclusion(entryId: string): Promise<void> {
    try {
      await this.api.deleteExclusion(entryId);
    } catch {
      /* 404 = already gone; refresh below reflects reality either way */
    }
    await this.refreshExclusions();
  }
}

export function mount(root: Document = document): App {
  const get = (id: string): HTMLElement => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  };
  const app = new App(new ApiClient(""), {
    banner: get("banner"),
    queue: get("queue"),
    detail: get("detail"),
    form: get("form"),
    exclusions: get("exclusions"),
  });
  void app.start();
  return app;
}

declare global {
  interface Window {
    __LIFTFLOW_NO_AUTOMOUNT__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__LIFTFLOW_NO_AUTOMOUNT__) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => mount());
  } else if (document.getElementById("queue")) {
    mount();
  }
}
