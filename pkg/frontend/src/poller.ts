// Polling is the only update channel; the service pushes nothing. Each
// tracked job gets its own chain of single-shot timers: the next request is
// scheduled only after the previous response lands, so a slow response never
// stacks requests, and updates apply last-write-wins per job. The chain ends
// the moment a terminal state arrives.

import type { ServiceClient } from "./api.js";
import type { JobDetail } from "./types.js";
import { isTerminal } from "./types.js";

export const POLL_INTERVAL_MS = 1000;

export type PollHandle = {
  readonly jobId: string;
  stop(): void;
};

type ChainState = {
  timer: ReturnType<typeof setTimeout> | null;
  stopped: boolean;
};

export class JobPoller {
  private readonly client: ServiceClient;
  private readonly onUpdate: (job: JobDetail) => void;
  private readonly onError: (jobId: string, error: Error) => void;
  private readonly intervalMs: number;
  private readonly chains = new Map<string, ChainState>();

  constructor(
    client: ServiceClient,
    onUpdate: (job: JobDetail) => void,
    onError: (jobId: string, error: Error) => void,
    intervalMs: number = POLL_INTERVAL_MS,
  ) {
    this.client = client;
    this.onUpdate = onUpdate;
    this.onError = onError;
    this.intervalMs = intervalMs;
  }

  // Fetches once immediately, then keeps polling until terminal or stopped.
  track(jobId: string): PollHandle {
    this.stopJob(jobId);
    const chain: ChainState = { timer: null, stopped: false };
    this.chains.set(jobId, chain);
    void this.pollOnce(jobId, chain);
    return {
      jobId,
      stop: () => this.stopJob(jobId),
    };
  }

  activeJobIds(): string[] {
    return [...this.chains.keys()];
  }

  stopJob(jobId: string): void {
    const chain = this.chains.get(jobId);
    if (!chain) {
      return;
    }
    chain.stopped = true;
    if (chain.timer !== null) {
      clearTimeout(chain.timer);
      chain.timer = null;
    }
    this.chains.delete(jobId);
  }

  stopAll(): void {
    for (const jobId of this.activeJobIds()) {
      this.stopJob(jobId);
    }
  }

  private async pollOnce(jobId: string, chain: ChainState): Promise<void> {
    let job: JobDetail;
    try {
      job = await this.client.getJob(jobId);
    } catch (error) {
      // A failed poll ends tracking; the caller surfaces the error and the
      // user can re-track. Retrying forever would leak requests against a
      // gone service or a deleted job.
      if (!chain.stopped) {
        this.stopJob(jobId);
        this.onError(jobId, error instanceof Error ? error : new Error(String(error)));
      }
      return;
    }
    if (chain.stopped) {
      return;
    }
    this.onUpdate(job);
    if (isTerminal(job.state)) {
      this.stopJob(jobId);
      return;
    }
    chain.timer = setTimeout(() => {
      chain.timer = null;
      void this.pollOnce(jobId, chain);
    }, this.intervalMs);
  }
}
