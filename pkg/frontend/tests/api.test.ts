import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function fakeFetch(status: number, payload: unknown) {
  const requests: { url: string; init?: RequestInit }[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    requests.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      statusText: String(status),
      json: async () => payload,
    } as Response;
  };
  return { requests, fetchFn };
}

describe("ApiClient", () => {
  it("posts to /sessions on createSession", async () => {
    const { requests, fetchFn } = fakeFetch(200, { id: "s1", view: {} });
    const res = await new ApiClient("", fetchFn).createSession();
    expect(res.id).toBe("s1");
    expect(requests[0].url).toBe("/sessions");
    expect(requests[0].init?.method).toBe("POST");
  });

  it("sends assignments as JSON with string values", async () => {
    const { requests, fetchFn } = fakeFetch(200, { view: {} });
    await new ApiClient("", fetchFn).setValue("s1", "MaxPrice", "85");
    expect(requests[0].url).toBe("/sessions/s1/assignments");
    expect(JSON.parse(String(requests[0].init?.body))).toEqual({
      symbol: "MaxPrice",
      value: "85",
    });
  });

  it("deletes assignments by symbol", async () => {
    const { requests, fetchFn } = fakeFetch(200, { view: {} });
    await new ApiClient("", fetchFn).retractValue("s1", "MaxPrice");
    expect(requests[0].url).toBe("/sessions/s1/assignments/MaxPrice");
    expect(requests[0].init?.method).toBe("DELETE");
  });

  it("queries explanations by symbol", async () => {
    const { requests, fetchFn } = fakeFetch(200, { items: [] });
    await new ApiClient("", fetchFn).explanation("s1", "EffPrice");
    expect(requests[0].url).toBe("/sessions/s1/explanation?symbol=EffPrice");
  });

  it("maps service errors to ApiError with code and message", async () => {
    const { fetchFn } = fakeFetch(409, {
      code: "candidate-violation",
      message: "value was eliminated",
    });
    const err = await new ApiClient("", fetchFn)
      .setValue("s1", "ReqForm", "form_tape")
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("candidate-violation");
    expect(err.message).toBe("value was eliminated");
  });

  it("prefixes a configured base URL", async () => {
    const { requests, fetchFn } = fakeFetch(200, {});
    await new ApiClient("http://localhost:8000", fetchFn).schema();
    expect(requests[0].url).toBe("http://localhost:8000/kb/schema");
  });
});
