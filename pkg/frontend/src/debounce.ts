/** Latest-wins request scheduling: at most one in-flight task, one pending. */

export type Task<T> = () => Promise<T>;

export class LatestWins<T> {
  private inFlight = false;
  private pending: Task<T> | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  public requestsIssued = 0;

  constructor(
    private onResult: (value: T) => void,
    private onError: (err: unknown) => void,
    private delayMs: number = 120,
  ) {}

  /** Debounced submit: rapid calls collapse; only the latest task runs. */
  submit(task: Task<T>): void {
    this.pending = task;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.drain();
    }, this.delayMs);
  }

  private async drain(): Promise<void> {
    if (this.inFlight || this.pending === null) return;
    const task = this.pending;
    this.pending = null;
    this.inFlight = true;
    this.requestsIssued += 1;
    try {
      const value = await task();
      this.onResult(value);
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
      if (this.pending !== null) void this.drain();
    }
  }
}
