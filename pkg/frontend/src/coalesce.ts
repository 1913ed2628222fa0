/** Request coalescing for live counts: rapid grid changes collapse into one
 * trailing call, and stale async responses lose to newer ones. */

export function coalesce<T>(delayMs: number, run: (arg: T) => void): (arg: T) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (arg: T) => {
    if (timer !== undefined) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = undefined;
      run(arg);
    }, delayMs);
  };
}

export class LatestOnly {
  private epoch = 0;

  begin(): number {
    return ++this.epoch;
  }

  isCurrent(token: number): boolean {
    return token === this.epoch;
  }
}
