// Screen flow: rating screens until the service says done, plus a live
// report view. State lives in the service; refreshing resumes at the
// service-reported next item.

import { ApiError, ReviewClient } from "./api.js";
import {
  errorBanner,
  likertGroup,
  renderPoem,
  renderReportTable,
  selectedValue,
} from "./widgets.js";

export interface UiSession {
  campaignId: string;
  reviewer: string;
}

export class App {
  constructor(
    private root: HTMLElement,
    private client: ReviewClient,
  ) {}

  private clear(): void {
    this.root.replaceChildren();
  }

  private showError(message: string, retry: () => void): void {
    this.root.querySelectorAll(".banner").forEach((b) => b.remove());
    this.root.prepend(errorBanner(message, retry));
  }

  async showRatingScreen(session: UiSession): Promise<void> {
    let step;
    try {
      step = await this.client.nextItem(session.campaignId, session.reviewer);
    } catch (err) {
      this.showError(describe(err), () => void this.showRatingScreen(session));
      return;
    }
    this.clear();
    if (step.done) {
      const done = document.createElement("p");
      done.className = "done";
      done.textContent = "All poems rated. Thank you!";
      this.root.appendChild(done);
      return;
    }

    const heading = document.createElement("h2");
    heading.textContent = `Poem ${step.poem_id}`;
    this.root.appendChild(heading);
    this.root.appendChild(renderPoem(step.text ?? ""));

    const form = document.createElement("form");
    form.className = "rating-form";
    const groups = (step.dimensions ?? []).map((dimension) => likertGroup(dimension));
    for (const group of groups) form.appendChild(group);

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Submit ratings";
    submit.disabled = true;
    form.appendChild(submit);

    form.addEventListener("change", () => {
      submit.disabled = !groups.every((g) => selectedValue(g) !== null);
    });

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitAndAdvance(session, step.poem_id ?? "", groups);
    });

    this.root.appendChild(form);
  }

  async submitAndAdvance(
    session: UiSession,
    poemId: string,
    groups: HTMLFieldSetElement[],
  ): Promise<void> {
    const answers = groups.map((group) => ({
      dimension: group.dataset.dimension ?? "",
      likert: selectedValue(group),
    }));
    if (answers.some((a) => a.likert === null)) return; // submit stays disabled until complete
    try {
      for (const answer of answers) {
        await this.client.submitRating(session.campaignId, {
          reviewer_id: session.reviewer,
          poem_id: poemId,
          dimension: answer.dimension,
          likert: answer.likert as number,
        });
      }
    } catch (err) {
      // validation problems keep the current answers on screen
      this.showError(describe(err), () => void this.submitAndAdvance(session, poemId, groups));
      return;
    }
    await this.showRatingScreen(session);
  }

  async showReport(campaignId: string): Promise<void> {
    let report;
    try {
      report = await this.client.report(campaignId);
    } catch (err) {
      this.showError(describe(err), () => void this.showReport(campaignId));
      return;
    }
    this.clear();
    const heading = document.createElement("h2");
    heading.textContent = `Report: ${campaignId}`;
    this.root.appendChild(heading);
    this.root.appendChild(renderReportTable(report));
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `Service error ${err.status}: ${err.message}`;
  return `Network error: ${String(err)}`;
}
