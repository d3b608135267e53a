// Live campaign view: summary header, suggestion card, observation entry,
// the logged-observation table, and a posterior slice chart. Optimistic
// updates are deliberately absent — after every successful tell the view
// re-fetches state, suggestion, and slice, so each rendered number comes
// from a service response.

import {
  closeCampaign,
  getCampaign,
  getSlice,
  getSuggestion,
  postObservation,
  ServiceError,
} from "./api.js";
import type { CampaignState, SlicePayload, Suggestion } from "./api.js";
import { renderSliceChart } from "./chart.js";
import { firstObservationError } from "./validate.js";
import type { FieldError } from "./validate.js";

export interface CampaignController {
  root: HTMLElement;
  /** Settles when the load or submit in flight has finished. */
  idle: Promise<void>;
}

function numberOrNaN(raw: string): number {
  return raw.trim() === "" ? NaN : Number(raw);
}

function div(className: string): HTMLDivElement {
  const node = document.createElement("div");
  node.className = className;
  return node;
}

function line(className: string, text: string): HTMLDivElement {
  const node = div(className);
  node.textContent = text;
  return node;
}

export function renderCampaign(root: HTMLElement, cid: string): CampaignController {
  const wrap = div("campaign");
  const summary = div("summary");
  const banner = div("banner");
  banner.style.display = "none";
  const columns = div("columns");
  const left = div("left");
  const right = div("right");
  columns.append(left, right);

  const suggestionCard = div("suggestion-card");
  const entryForm = document.createElement("form");
  entryForm.className = "entry";
  entryForm.noValidate = true;
  const recommendation = div("recommendation");
  const tableBox = div("table-box");
  left.append(suggestionCard, entryForm, recommendation, tableBox);

  const chartControls = div("chart-controls");
  const chartArea = div("chart-area");
  right.append(chartControls, chartArea);

  wrap.append(summary, banner, columns);
  root.appendChild(wrap);

  let state: CampaignState | null = null;
  let suggestion: Suggestion | null = null;
  let slice: SlicePayload | null = null;
  let sliceMessage = "enter observations to fit a model";
  let axis = 0;

  const ctl: CampaignController = { root, idle: Promise.resolve() };

  function showBanner(text: string, withRetry: boolean): void {
    banner.replaceChildren();
    banner.style.display = "";
    const msg = document.createElement("span");
    msg.textContent = text;
    banner.appendChild(msg);
    if (withRetry) {
      const retry = document.createElement("button");
      retry.type = "button";
      retry.className = "retry";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => {
        ctl.idle = submitEntry();
      });
      banner.appendChild(retry);
    }
  }

  function clearBanner(): void {
    banner.replaceChildren();
    banner.style.display = "none";
  }

  function renderSummary(): void {
    if (!state) return;
    summary.replaceChildren();
    const id = document.createElement("code");
    id.className = "campaign-id";
    id.textContent = state.id;
    summary.appendChild(id);
    const badge = document.createElement("span");
    badge.className = `status-badge status-${state.status}`;
    badge.textContent = state.status;
    summary.appendChild(badge);
    const meta = document.createElement("span");
    meta.className = "meta";
    const budget = state.budget === null ? "" : ` of ${state.budget}`;
    meta.textContent =
      `${state.kernel} / ${state.acquisition.kind}, ` +
      `${state.n_obs} observation${state.n_obs === 1 ? "" : "s"}${budget}`;
    summary.appendChild(meta);
    if (state.status === "active") {
      const close = document.createElement("button");
      close.type = "button";
      close.className = "close-campaign";
      close.textContent = "Close campaign";
      close.addEventListener("click", () => {
        ctl.idle = doClose();
      });
      summary.appendChild(close);
    }
  }

  function renderSuggestionCard(): void {
    suggestionCard.replaceChildren();
    if (!state) return;
    if (state.status !== "active") {
      suggestionCard.appendChild(line("sugg-closed", "Campaign is closed."));
      return;
    }
    if (!suggestion) return;
    const head = document.createElement("h3");
    head.textContent = "Next suggested condition";
    suggestionCard.appendChild(head);
    state.variables.forEach((v, i) => {
      suggestionCard.appendChild(
        line("suggestion-x", `${v.name} = ${suggestion!.x[i]}`));
    });
    const srcText = suggestion.fallback
      ? `source: ${suggestion.source} (model unavailable)`
      : `source: ${suggestion.source}`;
    suggestionCard.appendChild(line("sugg-source", srcText));
    if (suggestion.mu !== null) {
      suggestionCard.appendChild(line("sugg-mu", `predicted mean = ${suggestion.mu}`));
    }
    if (suggestion.s2 !== null) {
      suggestionCard.appendChild(line("sugg-s2", `predicted variance = ${suggestion.s2}`));
    }
    if (suggestion.acquisition !== null) {
      suggestionCard.appendChild(
        line("sugg-acq", `acquisition = ${suggestion.acquisition}`));
    }
    if (suggestion.budget_exhausted) {
      suggestionCard.appendChild(
        line("budget-note", "Budget exhausted — further entries are still accepted."));
    }
  }

  function renderEntry(): void {
    entryForm.replaceChildren();
    if (!state || state.status !== "active") {
      entryForm.style.display = "none";
      return;
    }
    entryForm.style.display = "";
    const head = document.createElement("h3");
    head.textContent = "Record result";
    entryForm.appendChild(head);
    state.variables.forEach((v, i) => {
      const row = div("form-row");
      const label = document.createElement("label");
      label.textContent = v.name;
      const input = document.createElement("input");
      input.className = "entry-x";
      input.dataset.field = `x[${i}]`;
      if (suggestion) input.value = String(suggestion.x[i]);
      const err = document.createElement("span");
      err.className = "field-error";
      row.append(label, input, err);
      entryForm.appendChild(row);
    });
    const yRow = div("form-row");
    const yLabel = document.createElement("label");
    yLabel.textContent = "measured y";
    const yInput = document.createElement("input");
    yInput.className = "entry-y";
    yInput.dataset.field = "y";
    const yErr = document.createElement("span");
    yErr.className = "field-error";
    yRow.append(yLabel, yInput, yErr);
    entryForm.appendChild(yRow);
    const noteRow = div("form-row");
    const noteLabel = document.createElement("label");
    noteLabel.textContent = "note";
    const noteInput = document.createElement("input");
    noteInput.className = "entry-note";
    noteRow.append(noteLabel, noteInput);
    entryForm.appendChild(noteRow);
    const entryError = document.createElement("p");
    entryError.className = "entry-error";
    entryForm.appendChild(entryError);
    const record = document.createElement("button");
    record.type = "submit";
    record.className = "record";
    record.textContent = "Record result";
    entryForm.appendChild(record);
  }

  function showEntryError(err: FieldError | null): void {
    for (const n of entryForm.querySelectorAll(".invalid")) n.classList.remove("invalid");
    for (const n of entryForm.querySelectorAll(".field-error")) n.textContent = "";
    const box = entryForm.querySelector(".entry-error");
    if (box) box.textContent = "";
    if (!err) return;
    const control = entryForm.querySelector(`[data-field="${err.field}"]`);
    if (control) {
      control.classList.add("invalid");
      const slot = control.closest(".form-row")?.querySelector(".field-error");
      if (slot) {
        slot.textContent = err.message;
        return;
      }
    }
    if (box) box.textContent = err.field ? `${err.field}: ${err.message}` : err.message;
  }

  function renderRecommendation(): void {
    recommendation.replaceChildren();
    if (!state) return;
    if (state.recommendation !== null) {
      const parts = state.variables
        .map((v, i) => `${v.name} = ${state!.recommendation![i]}`)
        .join(", ");
      recommendation.appendChild(line("rec-x", `model recommendation: ${parts}`));
      recommendation.appendChild(
        line("rec-mean", `predicted mean = ${state.predicted_mean}`));
    }
    if (state.best_observed !== null) {
      const parts = state.variables
        .map((v, i) => `${v.name} = ${state!.best_observed!.x[i]}`)
        .join(", ");
      recommendation.appendChild(
        line("best-observed", `best observed: y = ${state.best_observed.y} at ${parts}`));
    }
  }

  function renderObservations(): void {
    tableBox.replaceChildren();
    if (!state) return;
    const table = document.createElement("table");
    table.className = "observations";
    const thead = document.createElement("thead");
    const hr = document.createElement("tr");
    for (const name of ["#", ...state.variables.map((v) => v.name), "y", "note"]) {
      const th = document.createElement("th");
      th.textContent = name;
      hr.appendChild(th);
    }
    thead.appendChild(hr);
    table.appendChild(thead);
    const tbody = document.createElement("tbody");
    state.observations.forEach((o, k) => {
      const tr = document.createElement("tr");
      const idx = document.createElement("td");
      idx.textContent = String(k + 1);
      tr.appendChild(idx);
      o.x.forEach((v) => {
        const td = document.createElement("td");
        td.className = "obs-x";
        td.textContent = String(v);
        tr.appendChild(td);
      });
      const ty = document.createElement("td");
      ty.className = "obs-y";
      ty.textContent = String(o.y);
      tr.appendChild(ty);
      const tn = document.createElement("td");
      tn.className = "obs-note";
      tn.textContent = o.note ?? "";
      tr.appendChild(tn);
      tbody.appendChild(tr);
    });
    table.appendChild(tbody);
    tableBox.appendChild(table);
  }

  function renderChartControls(): void {
    chartControls.replaceChildren();
    if (!state || state.variables.length < 2) return;
    const label = document.createElement("label");
    label.textContent = "slice axis";
    const sel = document.createElement("select");
    sel.className = "axis-select";
    state.variables.forEach((v, i) => {
      const o = document.createElement("option");
      o.value = String(i);
      o.textContent = v.name;
      o.selected = i === axis;
      sel.appendChild(o);
    });
    sel.addEventListener("change", () => {
      axis = Number(sel.value);
      ctl.idle = refreshSlice().then(renderChart);
    });
    chartControls.append(label, sel);
  }

  function renderChart(): void {
    chartArea.replaceChildren();
    if (!state) return;
    if (!slice) {
      chartArea.appendChild(line("no-model", sliceMessage));
      return;
    }
    chartArea.appendChild(renderSliceChart(slice, {
      observations: state.observations,
      suggestion: state.status === "active" && suggestion ? suggestion.x : null,
    }));
  }

  async function refreshSlice(): Promise<void> {
    try {
      slice = await getSlice(cid, axis);
    } catch (exc) {
      slice = null;
      if (exc instanceof ServiceError && exc.code === "no_model") {
        sliceMessage = exc.message;
      } else {
        throw exc;
      }
    }
  }

  async function load(): Promise<void> {
    clearBanner();
    try {
      state = await getCampaign(cid);
      renderSummary();
      renderObservations();
      renderRecommendation();
      renderChartControls();
      if (state.status === "active") {
        suggestion = await getSuggestion(cid);
        await refreshSlice();
      } else {
        suggestion = null;
      }
      renderSuggestionCard();
      renderEntry();
      renderChart();
    } catch (exc) {
      const text = exc instanceof ServiceError
        ? exc.message
        : "network error, the service is unreachable";
      showBanner(text, false);
    }
  }

  async function submitEntry(): Promise<void> {
    if (!state) return;
    const xs = Array.from(
      entryForm.querySelectorAll<HTMLInputElement>(".entry-x"),
      (input) => numberOrNaN(input.value));
    const yInput = entryForm.querySelector<HTMLInputElement>(".entry-y")!;
    const noteInput = entryForm.querySelector<HTMLInputElement>(".entry-note")!;
    const y = numberOrNaN(yInput.value);
    const err = firstObservationError(xs, y, state.variables);
    if (err) {
      showEntryError(err);
      return;
    }
    const note = noteInput.value.trim();
    try {
      await postObservation(cid, { x: xs, y, note: note === "" ? null : note });
    } catch (exc) {
      if (exc instanceof ServiceError) {
        showEntryError({ field: exc.field ?? "", message: exc.message });
      } else {
        // Leave the form exactly as typed so the entry survives the outage.
        showBanner("network error, the result was not recorded", true);
      }
      return;
    }
    clearBanner();
    showEntryError(null);
    await load();
  }

  async function doClose(): Promise<void> {
    try {
      await closeCampaign(cid);
    } catch (exc) {
      const text = exc instanceof ServiceError
        ? exc.message
        : "network error, the service is unreachable";
      showBanner(text, false);
      return;
    }
    await load();
  }

  entryForm.addEventListener("submit", (evt) => {
    evt.preventDefault();
    ctl.idle = submitEntry();
  });

  ctl.idle = load();
  return ctl;
}
