import { ReviewClient } from "./api.js";
import { App } from "./app.js";

function bootstrap(): void {
  const form = document.getElementById("session-form") as HTMLFormElement;
  const campaignInput = document.getElementById("campaign-id") as HTMLInputElement;
  const reviewerInput = document.getElementById("reviewer-token") as HTMLInputElement;
  const reportButton = document.getElementById("view-report") as HTMLButtonElement;
  const screen = document.getElementById("screen") as HTMLElement;

  const app = new App(screen, new ReviewClient(""));

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const campaignId = campaignInput.value.trim();
    const reviewer = reviewerInput.value.trim();
    if (!campaignId || !reviewer) return;
    window.localStorage.setItem("versewright-reviewer", reviewer);
    void app.showRatingScreen({ campaignId, reviewer });
  });

  reportButton.addEventListener("click", () => {
    const campaignId = campaignInput.value.trim();
    if (!campaignId) return;
    void app.showReport(campaignId);
  });

  const saved = window.localStorage.getItem("versewright-reviewer");
  if (saved) reviewerInput.value = saved;
}

document.addEventListener("DOMContentLoaded", bootstrap);
