// Newest-wins frame slot: the socket writes at whatever rate frames arrive,
// the render loop takes at most one frame per animation tick.  A slow
// renderer therefore skips frames instead of queueing them.

import type { StateFrame } from "./protocol";

export class FrameStore {
  private latest: StateFrame | null = null;
  private seq = 0;
  private consumedSeq = 0;
  /** Frames overwritten before anyone consumed them. */
  dropped = 0;

  put(frame: StateFrame): void {
    if (this.latest !== null && this.seq > this.consumedSeq) {
      this.dropped += 1;
    }
    this.latest = frame;
    this.seq += 1;
  }

  /** The newest unconsumed frame, or null if nothing new arrived. */
  take(): StateFrame | null {
    if (this.seq === this.consumedSeq) return null;
    this.consumedSeq = this.seq;
    return this.latest;
  }

  /** Peek without consuming (for status displays). */
  current(): StateFrame | null {
    return this.latest;
  }
}

/**
 * Token-bucket rate limiter for outbound messages.  Pose updates from a
 * pointer drag can fire far faster than the simulator tick; anything over
 * the budget is coalesced by the caller (send only the newest pose).
 */
export class RateLimiter {
  private allowance: number;
  private lastCheck: number;

  constructor(
    private readonly perSecond: number,
    private readonly now: () => number = () => performance.now(),
  ) {
    this.allowance = perSecond;
    this.lastCheck = this.now();
  }

  tryAcquire(): boolean {
    const t = this.now();
    this.allowance = Math.min(
      this.perSecond,
      this.allowance + ((t - this.lastCheck) / 1000) * this.perSecond,
    );
    this.lastCheck = t;
    if (this.allowance < 1) return false;
    this.allowance -= 1;
    return true;
  }
}
