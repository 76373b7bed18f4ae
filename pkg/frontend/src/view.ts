// One card per tracked job. The card is dumb on purpose: it renders whatever
// the latest service payload says and never computes captions, prompts, or
// states on its own. The only client-side state is the prompt edit buffer.

import type { JobDetail, JobState } from "./types.js";

// Render order of the stage badges; failed is shown by highlighting the
// stage that broke, not as its own badge.
const STAGE_BADGES: ReadonlyArray<JobState> = [
  "queued",
  "captioning",
  "bridging",
  "generating",
  "done",
];

const STATE_RANK: Record<string, number> = {
  queued: 0,
  captioning: 1,
  bridging: 2,
  generating: 3,
  done: 4,
};

// The service reports a failed pipeline stage by its trace name; map it to
// the state badge that was active while it ran.
const FAILED_STAGE_BADGE: Record<string, JobState> = {
  caption: "captioning",
  aggregate: "captioning",
  bridge: "bridging",
  music: "generating",
};

export type CardHandlers = {
  onRegenerate: (jobId: string, prompt: string) => void;
};

export class JobCard {
  readonly element: HTMLElement;
  private readonly badges = new Map<JobState, HTMLElement>();
  private readonly captionEl: HTMLElement;
  private readonly promptBuffer: HTMLTextAreaElement;
  private readonly regenerateButton: HTMLButtonElement;
  private readonly audioSlot: HTMLElement;
  private readonly messageEl: HTMLElement;
  private readonly parentEl: HTMLElement;
  private readonly overriddenBadge: HTMLElement;
  private readonly audioUrlFor: (job: JobDetail) => string;
  private lastState: JobState | null = null;

  constructor(
    doc: Document,
    jobId: string,
    audioUrlFor: (job: JobDetail) => string,
    handlers: CardHandlers,
  ) {
    this.audioUrlFor = audioUrlFor;
    this.element = doc.createElement("article");
    this.element.className = "job-card";
    this.element.dataset.jobId = jobId;

    const header = doc.createElement("header");
    const title = doc.createElement("span");
    title.className = "job-title";
    title.textContent = `job ${jobId.slice(0, 8)}`;
    this.overriddenBadge = doc.createElement("span");
    this.overriddenBadge.className = "badge badge-overridden";
    this.overriddenBadge.textContent = "edited prompt";
    this.overriddenBadge.hidden = true;
    this.parentEl = doc.createElement("span");
    this.parentEl.className = "job-parent";
    this.parentEl.hidden = true;
    header.append(title, this.overriddenBadge, this.parentEl);

    const stages = doc.createElement("ol");
    stages.className = "stages";
    for (const name of STAGE_BADGES) {
      const badge = doc.createElement("li");
      badge.className = "stage";
      badge.dataset.stage = name;
      badge.textContent = name;
      stages.append(badge);
      this.badges.set(name, badge);
    }

    this.captionEl = doc.createElement("p");
    this.captionEl.className = "caption";
    this.captionEl.hidden = true;

    const editor = doc.createElement("div");
    editor.className = "prompt-editor";
    const label = doc.createElement("label");
    label.textContent = "music prompt";
    this.promptBuffer = doc.createElement("textarea");
    this.promptBuffer.className = "prompt-buffer";
    this.promptBuffer.disabled = true;
    label.append(this.promptBuffer);
    this.regenerateButton = doc.createElement("button");
    this.regenerateButton.className = "regenerate";
    this.regenerateButton.type = "button";
    this.regenerateButton.textContent = "regenerate";
    this.regenerateButton.disabled = true;
    this.regenerateButton.addEventListener("click", () => {
      const prompt = this.promptBuffer.value.trim();
      if (!prompt) {
        // Blocked client-side; the service would 422 anyway.
        this.showMessage("enter a music prompt before regenerating");
        return;
      }
      const jobIdAttr = this.element.dataset.jobId;
      if (jobIdAttr) {
        handlers.onRegenerate(jobIdAttr, prompt);
      }
    });
    editor.append(label, this.regenerateButton);

    this.audioSlot = doc.createElement("div");
    this.audioSlot.className = "audio-slot";

    this.messageEl = doc.createElement("p");
    this.messageEl.className = "message";
    this.messageEl.hidden = true;

    this.element.append(header, stages, this.captionEl, editor, this.audioSlot, this.messageEl);
  }

  update(job: JobDetail): void {
    this.renderBadges(job);

    this.overriddenBadge.hidden = !job.prompt_overridden;
    if (job.parent_job_id) {
      this.parentEl.textContent = `from ${job.parent_job_id.slice(0, 8)}`;
      this.parentEl.hidden = false;
    }

    if (job.caption !== null) {
      this.captionEl.textContent = job.caption;
      this.captionEl.hidden = false;
    }

    const done = job.state === "done";
    this.promptBuffer.disabled = !done;
    this.regenerateButton.disabled = !done;
    if (done && this.lastState !== "done" && job.music_prompt !== null) {
      // Seed the edit buffer once on arrival; after that it belongs to the
      // user.
      this.promptBuffer.value = job.music_prompt;
    }

    if (done && job.audio_url && this.audioSlot.childElementCount === 0) {
      const doc = this.element.ownerDocument;
      const audio = doc.createElement("audio");
      audio.controls = true;
      audio.src = this.audioUrlFor(job);
      this.audioSlot.append(audio);
    }

    if (job.state === "failed" && job.error) {
      this.showMessage(job.error.detail);
    }

    this.lastState = job.state;
  }

  showMessage(text: string): void {
    this.messageEl.textContent = text;
    this.messageEl.hidden = false;
  }

  private renderBadges(job: JobDetail): void {
    const rank = job.state === "failed" ? null : STATE_RANK[job.state] ?? null;
    const failedBadge =
      job.state === "failed" && job.error && job.error.stage
        ? FAILED_STAGE_BADGE[job.error.stage] ?? null
        : null;
    for (const [name, badge] of this.badges) {
      const badgeRank = STATE_RANK[name] ?? 0;
      badge.classList.remove("active", "reached", "failed");
      if (rank !== null) {
        if (badgeRank < rank) {
          badge.classList.add("reached");
        } else if (badgeRank === rank) {
          badge.classList.add("active");
          if (job.state === "done") {
            badge.classList.add("reached");
          }
        }
      } else if (failedBadge !== null) {
        const failedRank = STATE_RANK[failedBadge] ?? 0;
        if (badgeRank < failedRank) {
          badge.classList.add("reached");
        } else if (name === failedBadge) {
          badge.classList.add("failed");
        }
      }
    }
  }
}
