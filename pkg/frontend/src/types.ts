// Wire types mirroring the job service responses. The UI never derives any
// of these values itself; everything rendered comes from a service payload.

export type JobState =
  | "queued"
  | "captioning"
  | "bridging"
  | "generating"
  | "done"
  | "failed";

export const TERMINAL_STATES: ReadonlyArray<JobState> = ["done", "failed"];

export function isTerminal(state: JobState): boolean {
  return TERMINAL_STATES.includes(state);
}

export type JobError = {
  detail: string;
  // Pipeline stage that failed ("caption", "aggregate", "bridge", "music")
  // or null when the failure was not tied to a stage.
  stage: string | null;
};

export type JobOptions = {
  bypass_bridge: boolean;
  frame_count: number;
};

export type JobDetail = {
  job_id: string;
  state: JobState;
  created_at: string;
  kind: "image" | "video";
  user_prompt: string | null;
  options: JobOptions;
  requested_duration_s: number;
  prompt_overridden: boolean;
  parent_job_id: string | null;
  error: JobError | null;
  caption: string | null;
  music_prompt: string | null;
  audio_url: string | null;
  trace: unknown | null;
};

export type JobSummary = {
  job_id: string;
  state: JobState;
  created_at: string;
  kind: "image" | "video";
  prompt_overridden: boolean;
  parent_job_id: string | null;
};

export type SubmitOptions = {
  userPrompt?: string;
  durationS?: number;
  frames?: number;
  bypassBridge?: boolean;
};
