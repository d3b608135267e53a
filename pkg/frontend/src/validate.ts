// Client-side mirror of the service's validation rules. Field paths and
// message strings match the server byte for byte, so an inline error looks
// the same whichever side caught it, and the first failing rule wins just
// like on the server.

import type { VariableDef } from "./api.js";

export interface FieldError {
  field: string;
  message: string;
}

export const KERNEL_CHOICES = ["Gaussian", "Power", "Matern"];
export const ACQUISITION_KINDS = ["UC", "PI", "EI", "KG", "PES"];

const MAX_DIMENSIONS = 4;
const BOUND_SLACK = 1e-9;

/**
 * Render a number the way the server's string formatting does: integral
 * floats keep a trailing ".0", everything else is the shortest round-trip
 * form, which the two runtimes agree on.
 */
export function pyfloat(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e16) {
    return v.toFixed(1);
  }
  return String(v);
}

export interface CreateForm {
  variables: VariableDef[];
  kernel: string;
  seed: number;
  budget: number | null;
  initial_replicates: number;
}

export function firstCreateError(form: CreateForm): FieldError | null {
  const d = form.variables.length;
  if (d < 1 || d > MAX_DIMENSIONS) {
    return {
      field: "variables",
      message: `need 1 to ${MAX_DIMENSIONS} variables, got ${d}`,
    };
  }
  const names = new Set<string>();
  for (let i = 0; i < d; i++) {
    const v = form.variables[i];
    if (!v.name.trim()) {
      return { field: `variables[${i}].name`, message: "variable name is empty" };
    }
    if (names.has(v.name)) {
      return {
        field: `variables[${i}].name`,
        message: `duplicate variable name '${v.name}'`,
      };
    }
    names.add(v.name);
    if (!Number.isFinite(v.lower) || !Number.isFinite(v.upper)) {
      return { field: `variables[${i}].lower`, message: "bounds must be finite" };
    }
    if (!(v.lower < v.upper)) {
      return {
        field: `variables[${i}].upper`,
        message: "lower bound must be below upper bound",
      };
    }
  }
  if (!KERNEL_CHOICES.includes(form.kernel)) {
    return {
      field: "kernel",
      message: "kernel must be one of ('Gaussian', 'Power', 'Matern')",
    };
  }
  if (form.seed < 0) {
    return { field: "seed", message: "seed must be non-negative" };
  }
  if (form.budget !== null && form.budget < 1) {
    return { field: "budget", message: "budget must be positive" };
  }
  if (![1, 2, 3].includes(form.initial_replicates)) {
    return {
      field: "initial_replicates",
      message: "initial_replicates must be 1, 2, or 3",
    };
  }
  return null;
}

export function firstObservationError(
  x: number[],
  y: number,
  variables: VariableDef[],
): FieldError | null {
  const d = variables.length;
  if (x.length !== d) {
    return { field: "x", message: `x must have ${d} coordinates` };
  }
  if (!x.every((v) => Number.isFinite(v))) {
    return { field: "x", message: "x must be finite" };
  }
  if (!Number.isFinite(y)) {
    return { field: "y", message: "y must be finite" };
  }
  for (let i = 0; i < d; i++) {
    const v = x[i];
    const vr = variables[i];
    if (v < vr.lower - BOUND_SLACK || v > vr.upper + BOUND_SLACK) {
      return {
        field: `x[${i}]`,
        message: `${vr.name}=${pyfloat(v)} is outside [${pyfloat(vr.lower)}, ${pyfloat(vr.upper)}]`,
      };
    }
  }
  return null;
}
