// Interval polling with stale-response discard.  Responses are applied in
// arrival order, but a response from an older request than the newest
// applied one is dropped, so a slow round trip can never clobber fresh data.

export class Poller<T> {
  private timer: ReturnType<typeof setInterval> | null = null;
  private issued = 0;
  private applied = 0;
  private inFlight = 0;

  constructor(
    private readonly load: () => Promise<T>,
    private readonly apply: (value: T) => void,
    private readonly onError: (error: unknown) => void = () => {},
    public readonly intervalMs: number = 10_000,
  ) {}

  /** One forced fetch cycle (manual refresh); overlaps are resolved by seq. */
  async tick(): Promise<void> {
    const seq = ++this.issued;
    this.inFlight += 1;
    try {
      const value = await this.load();
      if (seq < this.applied) return; // a fresher response already landed
      this.applied = seq;
      this.apply(value);
    } catch (error) {
      this.onError(error);
    } finally {
      this.inFlight -= 1;
    }
  }

  /** Interval cycle: never stacks a second request on a slow one. */
  async tickIfIdle(): Promise<void> {
    if (this.inFlight > 0) return;
    await this.tick();
  }

  start(): void {
    if (this.timer !== null) return;
    void this.tick();
    this.timer = setInterval(() => void this.tickIfIdle(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
