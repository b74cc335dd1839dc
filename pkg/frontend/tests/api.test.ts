import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeFetch(
  responder: (url: string, init?: RequestInit) => Response,
): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  return {
    calls,
    fetch: (url, init) => {
      calls.push({ url, init });
      return Promise.resolve(responder(url, init));
    },
  };
}

describe("ApiClient", () => {
  it("fetches cards from the base url", async () => {
    const payload = { fingerprint: "abc", cards: [] };
    const { fetch, calls } = fakeFetch(() => jsonResponse(payload));
    const client = new ApiClient("http://svc", fetch);
    const cards = await client.cards();
    expect(cards).toEqual(payload);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc/cards");
    expect(calls[0].init).toBeUndefined();
  });

  it("posts json when creating a session", async () => {
    const { fetch, calls } = fakeFetch(() =>
      jsonResponse(
        { session: "s1", model: "m", anchor_size: 0, pick_cap: 45 },
        201,
      ),
    );
    const client = new ApiClient("", fetch);
    const created = await client.createSession("m");
    expect(created.session).toBe("s1");
    expect(calls[0].url).toBe("/sessions");
    expect(calls[0].init?.method).toBe("POST");
    expect(calls[0].init?.headers).toEqual({
      "content-type": "application/json",
    });
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ model: "m" });
  });

  it("sends pack and pick payloads to the session endpoints", async () => {
    const { fetch, calls } = fakeFetch((url) =>
      url.endsWith("/recommend")
        ? jsonResponse({ anchor_size: 2, ranked: [] })
        : jsonResponse({ session: "s1", anchor_size: 3, complete: false }),
    );
    const client = new ApiClient("", fetch);
    await client.recommend("s1", [3, 1, 4]);
    await client.pick("s1", [3, 1, 4], 4);
    expect(calls[0].url).toBe("/sessions/s1/recommend");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      pack: [3, 1, 4],
    });
    expect(calls[1].url).toBe("/sessions/s1/pick");
    expect(JSON.parse(String(calls[1].init?.body))).toEqual({
      pack: [3, 1, 4],
      picked: 4,
    });
  });

  it("url-encodes identifiers", async () => {
    const { fetch, calls } = fakeFetch(() =>
      jsonResponse({ model: "a b", embedding_dim: 2, explained_variance: [], points: [] }),
    );
    const client = new ApiClient("", fetch);
    await client.embeddings("a b");
    expect(calls[0].url).toBe("/models/a%20b/embeddings");
  });

  it("raises ApiError with the service message on error statuses", async () => {
    const { fetch } = fakeFetch(() =>
      jsonResponse({ error: "unknown card id 99" }, 400),
    );
    const client = new ApiClient("", fetch);
    const failure = client.recommend("s1", [99]);
    await expect(failure).rejects.toThrowError(ApiError);
    await expect(
      client.recommend("s1", [99]).catch((err: ApiError) => ({
        status: err.status,
        message: err.message,
      })),
    ).resolves.toEqual({ status: 400, message: "unknown card id 99" });
  });

  it("falls back to the http status when the error body is not json", async () => {
    const { fetch } = fakeFetch(
      () => new Response("boom", { status: 500 }),
    );
    const client = new ApiClient("", fetch);
    await expect(client.cards()).rejects.toMatchObject({
      status: 500,
      message: "HTTP 500",
    });
  });
});
