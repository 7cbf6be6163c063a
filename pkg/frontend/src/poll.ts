import type { ServiceClient } from './api.js';
import type { JobRecord } from './types.js';

/**
 * Poll a job until it reaches a terminal state. Resolves with the job
 * record on 'done', rejects on 'failed' or on a fetch error.
 */
export function pollJob(
  client: ServiceClient,
  jobId: string,
  intervalMs = 1000,
  onTick?: (job: JobRecord) => void,
): Promise<JobRecord> {
  return new Promise((resolve, reject) => {
    let timer: ReturnType<typeof setInterval> | null = null;

    const poll = async () => {
      try {
        const job = await client.getJob(jobId);
        onTick?.(job);
        if (job.state === 'done') {
          if (timer) clearInterval(timer);
          resolve(job);
        } else if (job.state === 'failed') {
          if (timer) clearInterval(timer);
          reject(new Error(job.error || 'job failed'));
        }
      } catch (err) {
        if (timer) clearInterval(timer);
        reject(err);
      }
    };

    timer = setInterval(poll, intervalMs);
    poll();
  });
}
