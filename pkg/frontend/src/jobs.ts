/**
 * Submit-and-poll job lifecycle against the poll-only service. One
 * optimize job may be in flight per region view at a time.
 */

import { getJob, submitJob } from "./api.js";
import type { JobKind, JobRecord } from "./types.js";

export const POLL_INTERVAL_MS = 1000;

export interface JobEvents {
  onStatus?: (status: string) => void;
  onDone: (record: JobRecord) => void;
  onError: (message: string) => void;
}

export class JobController {
  private inflight = false;

  get busy(): boolean {
    return this.inflight;
  }

  /**
   * Submit a job and poll it to a terminal state. Rejected immediately
   * if a job is already running for this view.
   */
  async run(
    regionId: string,
    kind: JobKind,
    params: object,
    events: JobEvents,
    intervalMs = POLL_INTERVAL_MS,
  ): Promise<string | null> {
    if (this.inflight) {
      events.onError("an optimization job is already running");
      return null;
    }
    this.inflight = true;
    let jobId: string;
    try {
      const submitted = await submitJob(regionId, kind, params);
      jobId = submitted.job_id;
      events.onStatus?.(submitted.status);
    } catch (err) {
      this.inflight = false;
      events.onError(err instanceof Error ? err.message : String(err));
      return null;
    }
    this.poll(jobId, events, intervalMs);
    return jobId;
  }

  private poll(jobId: string, events: JobEvents, intervalMs: number): void {
    const timer = setInterval(async () => {
      let record: JobRecord;
      try {
        record = await getJob(jobId);
      } catch (err) {
        clearInterval(timer);
        this.inflight = false;
        events.onError(err instanceof Error ? err.message : String(err));
        return;
      }
      events.onStatus?.(record.status);
      if (record.status === "done") {
        clearInterval(timer);
        this.inflight = false;
        events.onDone(record);
      } else if (record.status === "error") {
        clearInterval(timer);
        this.inflight = false;
        events.onError(record.error ?? "job failed");
      }
    }, intervalMs);
  }
}
