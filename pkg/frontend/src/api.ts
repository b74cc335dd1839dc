// Typed client for the draft recommendation HTTP API. The fetch
// implementation is injectable so tests can run without a server.

export interface CardInfo {
  id: number;
  name: string;
  colors: string;
  rarity: string;
  color_class: string;
}

export interface CardsResponse {
  fingerprint: string;
  cards: CardInfo[];
}

export interface ModelInfo {
  id: string;
  embedding_dim: number;
  n_cards: number;
  db_fingerprint: string;
}

export interface EmbeddingPoint {
  card_id: number;
  name: string;
  colors: string;
  rarity: string;
  color_class: string;
  x: number;
  y: number;
  distance_to_empty: number;
  embedding: number[];
}

export interface EmbeddingsResponse {
  model: string;
  embedding_dim: number;
  explained_variance: number[];
  points: EmbeddingPoint[];
}

export interface SessionCreated {
  session: string;
  model: string;
  anchor_size: number;
  pick_cap: number;
}

export interface PoolEntry {
  card_id: number;
  name: string;
  count: number;
}

export interface HistoryEntry {
  pack: number[];
  picked: number;
}

export interface SessionState {
  session: string;
  model: string;
  anchor_size: number;
  pick_cap: number;
  complete: boolean;
  pool: PoolEntry[];
  history: HistoryEntry[];
}

export interface RankedCard {
  card_id: number;
  name: string;
  distance: number;
  rank: number;
}

export interface Recommendation {
  anchor_size: number;
  ranked: RankedCard[];
}

export interface PickResult {
  session: string;
  anchor_size: number;
  complete: boolean;
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly base: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  cards(): Promise<CardsResponse> {
    return this.request("/cards");
  }

  models(): Promise<{ models: ModelInfo[] }> {
    return this.request("/models");
  }

  embeddings(modelId: string): Promise<EmbeddingsResponse> {
    return this.request(`/models/${encodeURIComponent(modelId)}/embeddings`);
  }

  createSession(model: string): Promise<SessionCreated> {
    return this.post("/sessions", { model });
  }

  session(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  recommend(sessionId: string, pack: number[]): Promise<Recommendation> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/recommend`, {
      pack,
    });
  }

  pick(
    sessionId: string,
    pack: number[],
    picked: number,
  ): Promise<PickResult> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/pick`, {
      pack,
      picked,
    });
  }
}
