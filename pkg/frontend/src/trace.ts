/** Live trace accumulator: enforces probe order via stream sequence numbers. */

import type { TraceEvent } from "./api.js";

export class TraceSeries {
  readonly events: TraceEvent[] = [];
  gapDetected = false;

  /**
   * Append an event if it is the next in sequence. Replayed events (seq
   * below the watermark) are ignored; a skipped seq marks the series as
   * gapped so the UI can resync with a fresh stream.
   */
  push(event: TraceEvent): boolean {
    if (event.seq < this.events.length) {
      return false;
    }
    if (event.seq > this.events.length) {
      this.gapDetected = true;
      return false;
    }
    this.events.push(event);
    return true;
  }

  reset(): void {
    this.events.length = 0;
    this.gapDetected = false;
  }

  /** Points of the accepted (kept) probes, in probe order. */
  acceptedPoints(): { iteration: number; powerDb: number }[] {
    return this.events
      .filter((e) => e.accepted)
      .map((e) => ({ iteration: e.iteration, powerDb: e.power_db }));
  }

  allPoints(): { iteration: number; powerDb: number }[] {
    return this.events.map((e) => ({ iteration: e.iteration, powerDb: e.power_db }));
  }

  isAcceptedMonotone(): boolean {
    const accepted = this.acceptedPoints();
    return accepted.every((p, i) => i === 0 || p.powerDb >= accepted[i - 1].powerDb);
  }

  improvementDb(): number | null {
    const accepted = this.acceptedPoints();
    if (this.events.length === 0 || accepted.length === 0) return null;
    return accepted[accepted.length - 1].powerDb - this.events[0].power_db;
  }
}
