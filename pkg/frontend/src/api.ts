// Thin client over the service REST routes. One method per route, no retry
// or caching layers; errors carry the HTTP status and the service's detail
// string so the UI can surface them inline.

import type { JobDetail, JobSummary, SubmitOptions } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ServiceError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ServiceError";
    this.status = status;
  }
}

async function errorFrom(response: Response): Promise<ServiceError> {
  let detail = `${response.status} ${response.statusText}`.trim();
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string" && body.detail) {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ServiceError(response.status, detail);
}

export class ServiceClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  jobUrl(jobId: string): string {
    return `${this.baseUrl}/api/jobs/${jobId}`;
  }

  // The audio element points straight at this route; the client never
  // downloads or decodes audio itself.
  audioUrl(jobId: string): string {
    return `${this.jobUrl(jobId)}/audio`;
  }

  async submitJob(media: File, options: SubmitOptions = {}): Promise<string> {
    const form = new FormData();
    form.append("media", media, media.name);
    if (options.userPrompt) {
      form.append("user_prompt", options.userPrompt);
    }
    if (options.durationS !== undefined) {
      form.append("duration", String(options.durationS));
    }
    if (options.frames !== undefined) {
      form.append("frames", String(options.frames));
    }
    if (options.bypassBridge) {
      form.append("bypass_bridge", "true");
    }
    const response = await this.fetchImpl(`${this.baseUrl}/api/jobs`, {
      method: "POST",
      body: form,
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
    const body = (await response.json()) as { job_id: string };
    return body.job_id;
  }

  async getJob(jobId: string): Promise<JobDetail> {
    const response = await this.fetchImpl(this.jobUrl(jobId));
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return (await response.json()) as JobDetail;
  }

  async listJobs(): Promise<JobSummary[]> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/jobs`);
    if (!response.ok) {
      throw await errorFrom(response);
    }
    const body = (await response.json()) as { jobs: JobSummary[] };
    return body.jobs;
  }

  async regenerate(jobId: string, prompt: string): Promise<string> {
    const response = await this.fetchImpl(`${this.jobUrl(jobId)}/regenerate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ prompt }),
    });
    if (!response.ok) {
      throw await errorFrom(response);
    }
    const body = (await response.json()) as { job_id: string };
    return body.job_id;
  }
}
