// Page assembly: an upload form plus one card per tracked job. New jobs come
// from the form or the regenerate button on a finished card; existing jobs
// can be hydrated from the listing route via loadExisting().

import { ServiceClient, ServiceError } from "./api.js";
import type { FetchLike } from "./api.js";
import { JobPoller, POLL_INTERVAL_MS } from "./poller.js";
import { JobCard } from "./view.js";
import type { JobDetail } from "./types.js";

export type AppConfig = {
  baseUrl: string;
  fetchImpl?: FetchLike;
  pollIntervalMs?: number;
};

export class App {
  readonly client: ServiceClient;
  readonly element: HTMLElement;
  private readonly doc: Document;
  private readonly poller: JobPoller;
  private readonly cards = new Map<string, JobCard>();
  private readonly jobsContainer: HTMLElement;
  private readonly fileInput: HTMLInputElement;
  private readonly promptInput: HTMLInputElement;
  private readonly formMessage: HTMLElement;

  constructor(root: HTMLElement, config: AppConfig) {
    this.doc = root.ownerDocument;
    this.client = new ServiceClient(config.baseUrl, config.fetchImpl);
    this.poller = new JobPoller(
      this.client,
      (job) => this.applyUpdate(job),
      (jobId, error) => this.cards.get(jobId)?.showMessage(error.message),
      config.pollIntervalMs ?? POLL_INTERVAL_MS,
    );

    this.element = this.doc.createElement("div");
    this.element.className = "app";

    const form = this.doc.createElement("form");
    form.className = "upload-form";
    this.fileInput = this.doc.createElement("input");
    this.fileInput.type = "file";
    this.fileInput.name = "media";
    this.fileInput.accept = "image/*,video/*,.zip";
    this.promptInput = this.doc.createElement("input");
    this.promptInput.type = "text";
    this.promptInput.name = "user_prompt";
    this.promptInput.placeholder = "optional steering prompt";
    const submit = this.doc.createElement("button");
    submit.type = "submit";
    submit.textContent = "generate music";
    this.formMessage = this.doc.createElement("p");
    this.formMessage.className = "message";
    this.formMessage.hidden = true;
    form.append(this.fileInput, this.promptInput, submit, this.formMessage);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const file = this.fileInput.files?.[0];
      if (!file) {
        this.showFormMessage("choose a file first");
        return;
      }
      void this.submitUpload(file, this.promptInput.value || undefined);
    });

    this.jobsContainer = this.doc.createElement("div");
    this.jobsContainer.className = "jobs";

    this.element.append(form, this.jobsContainer);
    root.append(this.element);
  }

  async submitUpload(file: File, userPrompt?: string): Promise<void> {
    this.clearFormMessage();
    let jobId: string;
    try {
      jobId = await this.client.submitJob(file, { userPrompt });
    } catch (error) {
      // Includes the payload-too-large rejection: message inline, no card.
      this.showFormMessage(messageOf(error));
      return;
    }
    this.trackJob(jobId);
  }

  async regenerateFrom(jobId: string, prompt: string): Promise<void> {
    let childId: string;
    try {
      childId = await this.client.regenerate(jobId, prompt);
    } catch (error) {
      this.cards.get(jobId)?.showMessage(messageOf(error));
      return;
    }
    this.trackJob(childId);
  }

  // Hydrate cards for jobs that already exist on the service. Terminal jobs
  // get exactly one detail fetch (the poller stops on the terminal state).
  async loadExisting(): Promise<void> {
    const summaries = await this.client.listJobs();
    for (const summary of summaries) {
      this.trackJob(summary.job_id);
    }
  }

  trackedJobIds(): string[] {
    return [...this.cards.keys()];
  }

  cardFor(jobId: string): JobCard | undefined {
    return this.cards.get(jobId);
  }

  dispose(): void {
    this.poller.stopAll();
  }

  private trackJob(jobId: string): void {
    if (!this.cards.has(jobId)) {
      const card = new JobCard(
        this.doc,
        jobId,
        (job) => `${this.client.baseUrl}${job.audio_url}`,
        { onRegenerate: (id, prompt) => void this.regenerateFrom(id, prompt) },
      );
      this.cards.set(jobId, card);
      this.jobsContainer.prepend(card.element);
    }
    this.poller.track(jobId);
  }

  private applyUpdate(job: JobDetail): void {
    this.cards.get(job.job_id)?.update(job);
  }

  private showFormMessage(text: string): void {
    this.formMessage.textContent = text;
    this.formMessage.hidden = false;
  }

  private clearFormMessage(): void {
    this.formMessage.textContent = "";
    this.formMessage.hidden = true;
  }
}

function messageOf(error: unknown): string {
  if (error instanceof ServiceError) {
    return error.message;
  }
  if (error instanceof Error) {
    return error.message;
  }
  return String(error);
}

export function createApp(root: HTMLElement, config: AppConfig): App {
  return new App(root, config);
}
