import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ServiceClient } from "../src/api.js";
import { JobPoller } from "../src/poller.js";
import type { JobDetail } from "../src/types.js";
import { FakeService } from "./fake_service.js";

const BASE = "http://svc.test";

function pngFile(): File {
  return new File([new Uint8Array([137, 80, 78, 71])], "photo.png", {
    type: "image/png",
  });
}

async function flush(): Promise<void> {
  await vi.advanceTimersByTimeAsync(0);
}

describe("JobPoller", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  async function setup() {
    const fake = new FakeService();
    const client = new ServiceClient(BASE, fake.fetch);
    const updates: JobDetail[] = [];
    const errors: Array<{ jobId: string; message: string }> = [];
    const poller = new JobPoller(
      client,
      (job) => updates.push(job),
      (jobId, error) => errors.push({ jobId, message: error.message }),
    );
    const jobId = await client.submitJob(pngFile());
    fake.log.length = 0; // keep only polling traffic in the log
    return { fake, client, poller, updates, errors, jobId };
  }

  it("fetches immediately and then once per interval", async () => {
    const { fake, poller, updates, jobId } = await setup();
    poller.track(jobId);
    await flush();
    expect(updates.map((j) => j.state)).toEqual(["queued"]);
    await vi.advanceTimersByTimeAsync(1000);
    await vi.advanceTimersByTimeAsync(1000);
    expect(updates.map((j) => j.state)).toEqual([
      "queued",
      "captioning",
      "bridging",
    ]);
    expect(fake.loggedCalls()).toEqual([
      `GET /api/jobs/${jobId}`,
      `GET /api/jobs/${jobId}`,
      `GET /api/jobs/${jobId}`,
    ]);
    poller.stopAll();
  });

  it("stops polling the moment the job reaches done", async () => {
    const { fake, poller, updates, jobId } = await setup();
    poller.track(jobId);
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(updates[updates.length - 1]?.state).toBe("done");
    const requestsAtDone = fake.log.length;
    expect(requestsAtDone).toBe(5); // queued..done, nothing after
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(requestsAtDone);
    expect(poller.activeJobIds()).toEqual([]);
  });

  it("stops polling on failed as well", async () => {
    const fake = new FakeService();
    fake.failAt = { stage: "bridge", detail: "backend unavailable" };
    const client = new ServiceClient(BASE, fake.fetch);
    const updates: JobDetail[] = [];
    const poller = new JobPoller(client, (job) => updates.push(job), () => {});
    const jobId = await client.submitJob(pngFile());
    fake.log.length = 0;
    poller.track(jobId);
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(updates[updates.length - 1]?.state).toBe("failed");
    const count = fake.log.length;
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(count);
  });

  it("stop() cancels a pending chain", async () => {
    const { fake, poller, jobId } = await setup();
    const handle = poller.track(jobId);
    await flush();
    handle.stop();
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(1); // only the immediate fetch
  });

  it("tracks several jobs independently", async () => {
    const fake = new FakeService();
    const client = new ServiceClient(BASE, fake.fetch);
    const updates: JobDetail[] = [];
    const poller = new JobPoller(client, (job) => updates.push(job), () => {});
    const first = await client.submitJob(pngFile());
    const second = await client.submitJob(pngFile());
    fake.log.length = 0;
    poller.track(first);
    poller.track(second);
    await flush();
    await vi.advanceTimersByTimeAsync(10_000);
    const states = (id: string) =>
      updates.filter((j) => j.job_id === id).map((j) => j.state);
    expect(states(first)[states(first).length - 1]).toBe("done");
    expect(states(second)[states(second).length - 1]).toBe("done");
    expect(poller.activeJobIds()).toEqual([]);
  });

  it("reports a polling error once and stops", async () => {
    const { poller, errors, fake } = await setup();
    poller.track("missing-job");
    await flush();
    expect(errors).toEqual([
      { jobId: "missing-job", message: "no job missing-job" },
    ]);
    const count = fake.log.length;
    await vi.advanceTimersByTimeAsync(60_000);
    expect(fake.log.length).toBe(count);
  });

  it("re-tracking a job resets its chain instead of doubling it", async () => {
    const { fake, poller, jobId } = await setup();
    poller.track(jobId);
    await flush();
    poller.track(jobId);
    await flush();
    await vi.advanceTimersByTimeAsync(1000);
    // one immediate fetch per track() call, then a single chain
    expect(fake.log.length).toBe(3);
    poller.stopAll();
  });
});
