import { describe, expect, it } from "vitest";

import type { CampaignState, VariableDef } from "../src/api.js";
import { firstCreateError, firstObservationError, pyfloat } from "../src/validate.js";
import { exchange, invalidCase, requestOf, responseOf } from "./helpers.js";

interface ErrorDoc {
  code: string;
  message: string;
  field: string;
}

const campaignVars: VariableDef[] =
  responseOf<CampaignState>(exchange("create")).variables;

function baseForm(variables: VariableDef[]) {
  return { variables, kernel: "Matern", seed: 0, budget: null, initial_replicates: 2 };
}

describe("create-form validation mirrors the server", () => {
  it("reversed bounds", () => {
    const c = invalidCase("bounds_order");
    const want = responseOf<ErrorDoc>(c);
    const req = requestOf<{ variables: VariableDef[] }>(c);
    const err = firstCreateError(baseForm(req.variables));
    expect(err).toEqual({ field: want.field, message: want.message });
  });

  it("duplicate variable name", () => {
    const c = invalidCase("duplicate_name");
    const want = responseOf<ErrorDoc>(c);
    const req = requestOf<{ variables: VariableDef[] }>(c);
    const err = firstCreateError(baseForm(req.variables));
    expect(err).toEqual({ field: want.field, message: want.message });
  });

  it("no variables at all", () => {
    const c = invalidCase("no_variables");
    const want = responseOf<ErrorDoc>(c);
    const err = firstCreateError(baseForm([]));
    expect(err).toEqual({ field: want.field, message: want.message });
  });

  it("accepts the request the server accepted", () => {
    const req = requestOf<{ variables: VariableDef[]; kernel: string; seed: number }>(
      exchange("create"));
    expect(firstCreateError({
      variables: req.variables,
      kernel: req.kernel,
      seed: req.seed,
      budget: 60,
      initial_replicates: 2,
    })).toBeNull();
  });

  it("flags the remaining server rules with matching fields", () => {
    const vars = [{ name: "temperature", lower: 40, upper: 90 }];
    expect(firstCreateError(baseForm([{ name: "  ", lower: 0, upper: 1 }]))!.field)
      .toBe("variables[0].name");
    expect(firstCreateError(baseForm([{ name: "t", lower: NaN, upper: 1 }]))!.field)
      .toBe("variables[0].lower");
    expect(firstCreateError({ ...baseForm(vars), kernel: "Cubic" })!.field)
      .toBe("kernel");
    expect(firstCreateError({ ...baseForm(vars), seed: -1 })).toEqual(
      { field: "seed", message: "seed must be non-negative" });
    expect(firstCreateError({ ...baseForm(vars), budget: 0 })).toEqual(
      { field: "budget", message: "budget must be positive" });
    expect(firstCreateError({ ...baseForm(vars), initial_replicates: 4 })!.field)
      .toBe("initial_replicates");
    const five = Array.from({ length: 5 }, (_, i) => (
      { name: `v${i}`, lower: 0, upper: 1 }));
    expect(firstCreateError(baseForm(five))).toEqual(
      { field: "variables", message: "need 1 to 4 variables, got 5" });
  });
});

describe("observation validation mirrors the server", () => {
  it("coordinate outside the declared bounds", () => {
    const c = invalidCase("x_out_of_bounds");
    const want = responseOf<ErrorDoc>(c);
    const req = requestOf<{ x: number[]; y: number }>(c);
    const err = firstObservationError(req.x, req.y, campaignVars);
    expect(err).toEqual({ field: want.field, message: want.message });
  });

  it("wrong number of coordinates", () => {
    const c = invalidCase("x_wrong_arity");
    const want = responseOf<ErrorDoc>(c);
    const req = requestOf<{ x: number[]; y: number }>(c);
    const err = firstObservationError(req.x, req.y, campaignVars);
    expect(err).toEqual({ field: want.field, message: want.message });
  });

  it("accepts the observations the server accepted", () => {
    for (const name of ["tell_1", "tell_5", "tell_10"]) {
      const req = requestOf<{ x: number[]; y: number }>(exchange(name));
      expect(firstObservationError(req.x, req.y, campaignVars)).toBeNull();
    }
  });

  it("non-finite values are stopped before any request", () => {
    expect(firstObservationError([NaN], 1.0, campaignVars)).toEqual(
      { field: "x", message: "x must be finite" });
    expect(firstObservationError([55.0], Infinity, campaignVars)).toEqual(
      { field: "y", message: "y must be finite" });
  });

  it("allows the same hair of slack past a bound as the server", () => {
    expect(firstObservationError([90.0000000005], 1.0, campaignVars)).toBeNull();
    expect(firstObservationError([90.1], 1.0, campaignVars)).not.toBeNull();
  });
});

describe("pyfloat", () => {
  it("renders numbers the way the server formats them", () => {
    expect(pyfloat(40)).toBe("40.0");
    expect(pyfloat(-3)).toBe("-3.0");
    expect(pyfloat(95.25)).toBe("95.25");
    expect(pyfloat(0.1)).toBe("0.1");
  });
});
