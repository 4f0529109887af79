import { describe, expect, it } from "vitest";

import { SequencedRequests, debounce } from "../src/debounce.js";

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

describe("debounce", () => {
  it("collapses a burst into one trailing call", async () => {
    let calls = 0;
    const fn = debounce(() => {
      calls += 1;
    }, 30);
    fn();
    fn();
    fn();
    expect(calls).toBe(0);
    await sleep(60);
    expect(calls).toBe(1);
  });
});

describe("sequenced requests", () => {
  it("a stale response never overwrites a newer one", async () => {
    const seq = new SequencedRequests<string>();
    const applied: string[] = [];
    const slow = seq.run(
      async () => {
        await sleep(50);
        return "old";
      },
      (v) => applied.push(v),
    );
    await sleep(5);
    await seq.run(async () => "new", (v) => applied.push(v));
    await slow;
    expect(applied).toEqual(["new"]);
  });

  it("in-order responses all apply", async () => {
    const seq = new SequencedRequests<number>();
    const applied: number[] = [];
    await seq.run(async () => 1, (v) => applied.push(v));
    await seq.run(async () => 2, (v) => applied.push(v));
    expect(applied).toEqual([1, 2]);
  });
});
