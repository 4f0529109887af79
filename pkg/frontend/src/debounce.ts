// Debounce plus response sequencing: rapid slider moves produce one request
// after the quiet period, and a stale response can never overwrite a newer
// one (responses are applied in submission order by sequence number).

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | null = null;
  return (...args: A) => {
    if (handle !== null) clearTimeout(handle);
    handle = setTimeout(() => fn(...args), waitMs);
  };
}

export class SequencedRequests<T> {
  private nextSeq = 0;
  private applied = -1;

  /** Run the request; deliver the result only if nothing newer was applied. */
  async run(fn: () => Promise<T>, apply: (value: T) => void): Promise<void> {
    const seq = this.nextSeq++;
    const value = await fn();
    if (seq > this.applied) {
      this.applied = seq;
      apply(value);
    }
  }
}
