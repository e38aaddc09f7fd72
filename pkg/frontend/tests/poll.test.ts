import { describe, expect, it } from "vitest";

import { Poller } from "../src/poll.js";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (error: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("Poller", () => {
  it("applies responses in arrival order", async () => {
    const applied: number[] = [];
    let value = 0;
    const poller = new Poller(
      async () => ++value,
      (v) => applied.push(v),
    );
    await poller.tick();
    await poller.tick();
    expect(applied).toEqual([1, 2]);
  });

  it("discards a slow stale response after a fresh one landed", async () => {
    const applied: number[] = [];
    const pending = [deferred<number>(), deferred<number>()];
    let call = 0;
    const poller = new Poller(
      () => pending[call++]!.promise,
      (v) => applied.push(v),
    );
    const first = poller.tick(); // request 1, slow
    const second = poller.tick(); // request 2, fast
    pending[1]!.resolve(2);
    await second;
    pending[0]!.resolve(1); // stale: must be dropped
    await first;
    expect(applied).toEqual([2]);
  });

  it("interval cycles never stack on a slow request", async () => {
    const applied: number[] = [];
    const slow = deferred<number>();
    let calls = 0;
    const poller = new Poller(
      () => {
        calls += 1;
        return slow.promise;
      },
      (v) => applied.push(v),
    );
    const first = poller.tick();
    await poller.tickIfIdle(); // skipped: one request already in flight
    expect(calls).toBe(1);
    slow.resolve(9);
    await first;
    await poller.tickIfIdle(); // idle again: runs
    expect(calls).toBe(2);
  });

  it("routes load failures to the error handler and keeps old data", async () => {
    const applied: number[] = [];
    const errors: unknown[] = [];
    let fail = false;
    const poller = new Poller(
      async () => {
        if (fail) throw new Error("network down");
        return 7;
      },
      (v) => applied.push(v),
      (e) => errors.push(e),
    );
    await poller.tick();
    fail = true;
    await poller.tick();
    expect(applied).toEqual([7]);
    expect(errors).toHaveLength(1);
  });
});
