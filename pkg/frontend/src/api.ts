// Typed client for the review service JSON API. The UI never recomputes
// report numbers; it renders whatever this client returns.

export interface NextItemStep {
  done: boolean;
  poem_id?: string;
  text?: string;
  dimensions?: string[];
}

export interface CampaignMeta {
  id: string;
  kind: "emotion" | "dream";
  items: { id: string; text: string; target: string | null }[];
  dimensions: string[];
  reviewers: string[];
}

export interface EmotionReport {
  kind: "emotion";
  campaign_id: string;
  per_emotion: Record<string, number | null>;
  per_poem: { poem_id: string; target: string; percent: number | null; raters: number }[];
}

export interface DreamReport {
  kind: "dream";
  campaign_id: string;
  dimensions: string[];
  per_poem: Record<string, Record<string, number | null>>;
}

export type Report = EmotionReport | DreamReport;

export interface RatingPayload {
  reviewer_id: string;
  poem_id: string;
  dimension: string;
  likert: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchFn = typeof globalThis.fetch;

export class ReviewClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchFn = globalThis.fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (response.status === 204) return null;
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string };
        if (body.error) detail = body.error;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }

  campaign(id: string): Promise<CampaignMeta> {
    return this.request(`/campaigns/${encodeURIComponent(id)}`) as Promise<CampaignMeta>;
  }

  nextItem(campaignId: string, reviewer: string): Promise<NextItemStep> {
    const query = new URLSearchParams({ reviewer });
    return this.request(
      `/campaigns/${encodeURIComponent(campaignId)}/next?${query}`,
    ) as Promise<NextItemStep>;
  }

  async submitRating(campaignId: string, payload: RatingPayload): Promise<void> {
    await this.request(`/campaigns/${encodeURIComponent(campaignId)}/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  report(campaignId: string): Promise<Report> {
    return this.request(`/campaigns/${encodeURIComponent(campaignId)}/report`) as Promise<Report>;
  }
}
