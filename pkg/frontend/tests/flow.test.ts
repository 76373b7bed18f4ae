// End-to-end UI flow against the scripted service: upload, watch to done,
// edit the prompt, regenerate, and compare players. The request log is
// asserted exactly, including that polling goes silent after terminal
// states, and that every rendered value came off the wire.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { createApp } from "../src/app.js";
import type { App } from "../src/app.js";
import { FakeService } from "./fake_service.js";

const BASE = "http://svc.test";

function pngFile(): File {
  return new File([new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10])], "photo.png", {
    type: "image/png",
  });
}

async function flush(): Promise<void> {
  await vi.advanceTimersByTimeAsync(0);
}

function submitThroughForm(app: App, file: File, prompt?: string): void {
  const form = app.element.querySelector<HTMLFormElement>("form.upload-form");
  const fileInput = form?.querySelector<HTMLInputElement>('input[type="file"]');
  const promptInput = form?.querySelector<HTMLInputElement>('input[type="text"]');
  expect(form && fileInput && promptInput).toBeTruthy();
  Object.defineProperty(fileInput, "files", {
    value: [file],
    configurable: true,
  });
  if (prompt !== undefined) {
    promptInput!.value = prompt;
  }
  form!.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

describe("upload to regenerate flow", () => {
  let root: HTMLElement;
  let fake: FakeService;
  let app: App;

  beforeEach(() => {
    vi.useFakeTimers();
    root = document.createElement("div");
    document.body.append(root);
    fake = new FakeService();
    app = createApp(root, { baseUrl: BASE, fetchImpl: fake.fetch });
  });

  afterEach(() => {
    app.dispose();
    root.remove();
    vi.useRealTimers();
  });

  it("issues exactly the specified calls and renders both players", async () => {
    submitThroughForm(app, pngFile(), "lofi, calm");
    await flush();

    // Walk the parent to done: immediate poll + one per second.
    await vi.advanceTimersByTimeAsync(4000);
    expect(fake.loggedCalls()).toEqual([
      "POST /api/jobs",
      "GET /api/jobs/job-1",
      "GET /api/jobs/job-1",
      "GET /api/jobs/job-1",
      "GET /api/jobs/job-1",
      "GET /api/jobs/job-1",
    ]);
    expect(fake.log[0]?.body).toEqual({
      media: "file:photo.png",
      user_prompt: "lofi, calm",
    });

    // Polling has ceased on the terminal state: a quiet minute adds nothing.
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(6);

    const parentCard = app.cardFor("job-1")!;
    const caption = parentCard.element.querySelector<HTMLElement>(".caption");
    expect(caption?.textContent).toBe("mock caption ca9f43f1 (job-1)");
    const buffer =
      parentCard.element.querySelector<HTMLTextAreaElement>(".prompt-buffer");
    expect(buffer?.value).toBe("mock: 14cabe59 (job-1)");

    // Edit the prompt and regenerate.
    buffer!.value = "slow jazz, brushed drums";
    parentCard.element.querySelector<HTMLButtonElement>(".regenerate")!.click();
    await flush();
    await vi.advanceTimersByTimeAsync(2000);

    expect(fake.loggedCalls().slice(6)).toEqual([
      "POST /api/jobs/job-1/regenerate",
      "GET /api/jobs/job-2",
      "GET /api/jobs/job-2",
      "GET /api/jobs/job-2",
    ]);
    expect(fake.log[6]?.body).toEqual({ prompt: "slow jazz, brushed drums" });

    // Quiet again after the child finishes; the log is complete.
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(10);

    // Parent and child players are both rendered, each on its own audio
    // route, and the child is labelled as an override of the parent.
    const childCard = app.cardFor("job-2")!;
    const parentAudio = parentCard.element.querySelector("audio");
    const childAudio = childCard.element.querySelector("audio");
    expect(parentAudio?.getAttribute("src")).toBe(
      "http://svc.test/api/jobs/job-1/audio",
    );
    expect(childAudio?.getAttribute("src")).toBe(
      "http://svc.test/api/jobs/job-2/audio",
    );
    const childBuffer =
      childCard.element.querySelector<HTMLTextAreaElement>(".prompt-buffer");
    expect(childBuffer?.value).toBe("slow jazz, brushed drums");
    expect(
      childCard.element.querySelector<HTMLElement>(".badge-overridden")?.hidden,
    ).toBe(false);
    expect(
      childCard.element.querySelector<HTMLElement>(".job-parent")?.textContent,
    ).toBe("from job-1");

    // Newest card is rendered first.
    const order = [...root.querySelectorAll<HTMLElement>(".job-card")].map(
      (el) => el.dataset.jobId,
    );
    expect(order).toEqual(["job-2", "job-1"]);
  });

  it("renders an oversize rejection inline and creates no job", async () => {
    fake.rejectSubmit = {
      status: 413,
      detail: "payload too large: 210000000 bytes exceeds the 104857600 cap",
    };
    submitThroughForm(app, pngFile());
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);

    expect(fake.loggedCalls()).toEqual(["POST /api/jobs"]);
    expect(app.trackedJobIds()).toEqual([]);
    expect(root.querySelectorAll(".job-card").length).toBe(0);
    const message = app.element.querySelector<HTMLElement>("form .message");
    expect(message?.hidden).toBe(false);
    expect(message?.textContent).toContain("payload too large");
  });

  it("highlights the failing stage and disables regeneration on failure", async () => {
    fake.failAt = { stage: "bridge", detail: "llm backend unavailable" };
    submitThroughForm(app, pngFile());
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);

    const card = app.cardFor("job-1")!;
    const failedBadge = card.element.querySelector<HTMLElement>(
      '.stage[data-stage="bridging"]',
    );
    expect(failedBadge?.classList.contains("failed")).toBe(true);
    expect(
      card.element.querySelector<HTMLElement>(".message")?.textContent,
    ).toBe("llm backend unavailable");
    expect(
      card.element.querySelector<HTMLButtonElement>(".regenerate")?.disabled,
    ).toBe(true);

    // Failure is terminal: no further polling.
    const count = fake.log.length;
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(count);
  });

  it("surfaces a regenerate conflict on the job card", async () => {
    submitThroughForm(app, pngFile());
    await flush(); // job submitted, still queued

    // The button is disabled while running; exercise the path a stale click
    // would hit. The service answers 409 and the card shows it inline.
    await app.regenerateFrom("job-1", "too early");
    const card = app.cardFor("job-1")!;
    const message = card.element.querySelector<HTMLElement>(".message");
    expect(message?.hidden).toBe(false);
    expect(message?.textContent).toContain("not done");
    expect(app.trackedJobIds()).toEqual(["job-1"]);

    // The rejected attempt spawned no polling chain for a child job.
    await vi.advanceTimersByTimeAsync(60_000);
    const childPolls = fake
      .loggedCalls()
      .filter((call) => call.startsWith("GET /api/jobs/job-2"));
    expect(childPolls).toEqual([]);
  });

  it("hydrates existing jobs from the listing with one fetch each", async () => {
    // Seed two finished jobs through a throwaway app instance.
    submitThroughForm(app, pngFile());
    await flush();
    await vi.advanceTimersByTimeAsync(5000);
    app.dispose();

    fake.log.length = 0;
    const root2 = document.createElement("div");
    document.body.append(root2);
    const app2 = createApp(root2, { baseUrl: BASE, fetchImpl: fake.fetch });
    await app2.loadExisting();
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(fake.loggedCalls()).toEqual(["GET /api/jobs", "GET /api/jobs/job-1"]);
    const card = app2.cardFor("job-1");
    expect(card?.element.querySelector("audio")).toBeTruthy();
    app2.dispose();
    root2.remove();
  });
});
