// Campaign creation form. Validation runs client-side first (mirroring the
// server's rules), so most mistakes never leave the page; whatever the
// server still rejects is surfaced inline from its error payload.

import { createCampaign, ServiceError } from "./api.js";
import type { CreateCampaignRequest, VariableDef } from "./api.js";
import {
  ACQUISITION_KINDS,
  firstCreateError,
  KERNEL_CHOICES,
} from "./validate.js";
import type { FieldError } from "./validate.js";

export interface WizardController {
  root: HTMLElement;
  form: HTMLFormElement;
  /** Settles when the submit in flight (if any) has finished. */
  idle: Promise<void>;
}

function numberOrNaN(raw: string): number {
  return raw.trim() === "" ? NaN : Number(raw);
}

function option(value: string, selected: boolean): HTMLOptionElement {
  const o = document.createElement("option");
  o.value = value;
  o.textContent = value;
  o.selected = selected;
  return o;
}

function fieldRow(labelText: string, control: HTMLElement): HTMLElement {
  const row = document.createElement("div");
  row.className = "form-row";
  const label = document.createElement("label");
  label.textContent = labelText;
  row.appendChild(label);
  row.appendChild(control);
  const err = document.createElement("span");
  err.className = "field-error";
  row.appendChild(err);
  return row;
}

export function renderWizard(root: HTMLElement): WizardController {
  const wrap = document.createElement("div");
  wrap.className = "wizard";
  const title = document.createElement("h2");
  title.textContent = "New campaign";
  wrap.appendChild(title);

  const form = document.createElement("form");
  form.className = "create-form";
  form.noValidate = true;

  const varsBox = document.createElement("div");
  varsBox.className = "variables";
  form.appendChild(varsBox);

  interface VarRowInputs {
    name: HTMLInputElement;
    lower: HTMLInputElement;
    upper: HTMLInputElement;
  }
  const varRows: VarRowInputs[] = [];

  function textInput(field: string, placeholder: string): HTMLInputElement {
    const input = document.createElement("input");
    input.dataset.field = field;
    input.placeholder = placeholder;
    return input;
  }

  function rebuildVariableRows(): void {
    varsBox.replaceChildren();
    varRows.forEach((inputs, i) => {
      inputs.name.dataset.field = `variables[${i}].name`;
      inputs.lower.dataset.field = `variables[${i}].lower`;
      inputs.upper.dataset.field = `variables[${i}].upper`;
      const row = document.createElement("div");
      row.className = "form-row var-row";
      row.append(inputs.name, inputs.lower, inputs.upper);
      if (varRows.length > 1) {
        const rm = document.createElement("button");
        rm.type = "button";
        rm.className = "remove-variable";
        rm.textContent = "remove";
        rm.addEventListener("click", () => {
          varRows.splice(i, 1);
          rebuildVariableRows();
        });
        row.appendChild(rm);
      }
      const err = document.createElement("span");
      err.className = "field-error";
      row.appendChild(err);
      varsBox.appendChild(row);
    });
    addBtn.disabled = varRows.length >= 4;
  }

  function addVariableRow(): void {
    varRows.push({
      name: textInput("", "name"),
      lower: textInput("", "lower bound"),
      upper: textInput("", "upper bound"),
    });
    rebuildVariableRows();
  }

  const addBtn = document.createElement("button");
  addBtn.type = "button";
  addBtn.className = "add-variable";
  addBtn.textContent = "add variable";
  addBtn.addEventListener("click", addVariableRow);
  form.appendChild(addBtn);

  const kernelSel = document.createElement("select");
  kernelSel.dataset.field = "kernel";
  for (const k of KERNEL_CHOICES) kernelSel.appendChild(option(k, k === "Matern"));
  form.appendChild(fieldRow("correlation family", kernelSel));

  const acqSel = document.createElement("select");
  acqSel.dataset.field = "acquisition";
  for (const k of ACQUISITION_KINDS) acqSel.appendChild(option(k, k === "EI"));
  form.appendChild(fieldRow("acquisition", acqSel));

  const seedInput = document.createElement("input");
  seedInput.dataset.field = "seed";
  seedInput.value = "0";
  form.appendChild(fieldRow("seed", seedInput));

  const budgetInput = document.createElement("input");
  budgetInput.dataset.field = "budget";
  budgetInput.placeholder = "unlimited";
  form.appendChild(fieldRow("budget", budgetInput));

  const replSel = document.createElement("select");
  replSel.dataset.field = "initial_replicates";
  for (const r of ["1", "2", "3"]) replSel.appendChild(option(r, r === "2"));
  form.appendChild(fieldRow("initial replicates", replSel));

  const formError = document.createElement("p");
  formError.className = "form-error";
  form.appendChild(formError);

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Create campaign";
  form.appendChild(submit);

  addVariableRow();

  function showError(err: FieldError | null): void {
    for (const n of form.querySelectorAll(".invalid")) n.classList.remove("invalid");
    for (const n of form.querySelectorAll(".field-error")) n.textContent = "";
    formError.textContent = "";
    if (!err) return;
    const control = form.querySelector(`[data-field="${err.field}"]`);
    if (control) {
      control.classList.add("invalid");
      const slot = control.closest(".form-row")?.querySelector(".field-error");
      if (slot) {
        slot.textContent = err.message;
        return;
      }
    }
    formError.textContent = err.field ? `${err.field}: ${err.message}` : err.message;
  }

  const ctl: WizardController = { root, form, idle: Promise.resolve() };

  async function submitForm(): Promise<void> {
    const variables: VariableDef[] = varRows.map((r) => ({
      name: r.name.value.trim(),
      lower: numberOrNaN(r.lower.value),
      upper: numberOrNaN(r.upper.value),
    }));
    const budgetRaw = budgetInput.value.trim();
    const seed = numberOrNaN(seedInput.value);
    const budget = budgetRaw === "" ? null : Number(budgetRaw);
    // Non-numeric seed/budget would never parse server-side; stop early.
    if (!Number.isInteger(seed)) {
      showError({ field: "seed", message: "seed must be an integer" });
      return;
    }
    if (budget !== null && !Number.isInteger(budget)) {
      showError({ field: "budget", message: "budget must be an integer" });
      return;
    }
    const err = firstCreateError({
      variables,
      kernel: kernelSel.value,
      seed,
      budget,
      initial_replicates: Number(replSel.value),
    });
    if (err) {
      showError(err);
      return;
    }
    const req: CreateCampaignRequest = {
      variables,
      kernel: kernelSel.value,
      acquisition: { kind: acqSel.value },
      seed,
      initial_replicates: Number(replSel.value),
    };
    if (budget !== null) req.budget = budget;
    try {
      const state = await createCampaign(req);
      showError(null);
      location.hash = `#/c/${state.id}`;
    } catch (exc) {
      if (exc instanceof ServiceError) {
        showError({ field: exc.field ?? "", message: exc.message });
      } else {
        showError({ field: "", message: "network error, the service is unreachable" });
      }
    }
  }

  form.addEventListener("submit", (evt) => {
    evt.preventDefault();
    ctl.idle = submitForm();
  });

  wrap.appendChild(form);
  root.appendChild(wrap);
  return ctl;
}
