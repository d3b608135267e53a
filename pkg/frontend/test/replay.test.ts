import { beforeEach, describe, expect, it } from "vitest";

import type {
  CampaignState,
  SlicePayload,
  Suggestion,
} from "../src/api.js";
import { renderCampaign } from "../src/campaign.js";
import { renderWizard } from "../src/wizard.js";
import {
  exchange,
  FetchReplay,
  installBrokenFetch,
  invalidCase,
  requestOf,
  responseOf,
  session,
} from "./helpers.js";

function submit(form: HTMLFormElement): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
  location.hash = "";
});

describe("scripted session replay against captured service traffic", () => {
  it("walks create, ten entries, and the suggestion reads end to end", async () => {
    const replay = new FetchReplay();
    replay.install();
    const cid = session.campaign_id;

    // Wizard, filled exactly like the captured create request.
    replay.expect("create");
    const wiz = renderWizard(root);
    const set = (field: string, value: string) => {
      wiz.form.querySelector<HTMLInputElement>(`[data-field="${field}"]`)!.value = value;
    };
    set("variables[0].name", "temperature");
    set("variables[0].lower", "40");
    set("variables[0].upper", "90");
    set("seed", "7");
    set("budget", "60");
    // kernel Matern, acquisition EI, replicates 2 are the form defaults
    submit(wiz.form);
    await wiz.idle;
    expect(replay.errors).toEqual([]);
    expect(replay.pending).toBe(0);
    expect(location.hash).toBe(`#/c/${cid}`);

    // Campaign page load: state, first suggestion, slice (no model yet).
    root.replaceChildren();
    replay.expect("state_0", "suggestion_0", "slice_0");
    const ctl = renderCampaign(root, cid);
    await ctl.idle;
    expect(replay.errors).toEqual([]);
    const sugg0 = responseOf<Suggestion>(exchange("suggestion_0"));
    expect(root.querySelector(".suggestion-x")!.textContent)
      .toBe(`temperature = ${String(sugg0.x[0])}`);
    expect(root.querySelector(".sugg-source")!.textContent)
      .toBe("source: initial_design");
    expect(root.querySelector(".no-model")!.textContent)
      .toBe(responseOf<{ message: string }>(exchange("slice_0")).message);
    expect(root.querySelectorAll("table.observations tbody tr")).toHaveLength(0);

    // Ten observation entries; x stays prefilled with the served
    // suggestion, so only y and the note are typed.
    for (let k = 1; k <= 10; k++) {
      const req = requestOf<{ x: number[]; y: number; note: string }>(
        exchange(`tell_${k}`));
      expect(root.querySelector<HTMLInputElement>(".entry-x")!.value)
        .toBe(String(req.x[0]));
      replay.expect(`tell_${k}`, `state_${k}`, `suggestion_${k}`, `slice_${k}`);
      root.querySelector<HTMLInputElement>(".entry-y")!.value = String(req.y);
      root.querySelector<HTMLInputElement>(".entry-note")!.value = req.note;
      submit(root.querySelector<HTMLFormElement>("form.entry")!);
      await ctl.idle;
      expect(replay.errors).toEqual([]);
      expect(replay.pending).toBe(0);

      // Table shows exactly the observations the service returned.
      const state = responseOf<CampaignState>(exchange(`state_${k}`));
      const rows = root.querySelectorAll("table.observations tbody tr");
      expect(rows).toHaveLength(k);
      rows.forEach((row, i) => {
        expect(row.querySelector(".obs-x")!.textContent)
          .toBe(String(state.observations[i].x[0]));
        expect(row.querySelector(".obs-y")!.textContent)
          .toBe(String(state.observations[i].y));
        expect(row.querySelector(".obs-note")!.textContent)
          .toBe(state.observations[i].note ?? "");
      });

      // Suggestion card shows the fresh suggestion.
      const sugg = responseOf<Suggestion>(exchange(`suggestion_${k}`));
      expect(root.querySelector(".suggestion-x")!.textContent)
        .toBe(`temperature = ${String(sugg.x[0])}`);

      // Chart appears once the service can fit a model.
      const sliceEx = exchange(`slice_${k}`);
      if (sliceEx.status === 200) {
        const slice = responseOf<SlicePayload>(sliceEx);
        const pts = root.querySelector("polyline.mean-line")!
          .getAttribute("points")!.trim().split(/\s+/);
        expect(pts).toHaveLength(slice.x.length);
        expect(root.querySelectorAll("circle.obs-dot")).toHaveLength(k);
      } else {
        expect(root.querySelector(".no-model")!.textContent)
          .toBe((sliceEx.response as { message: string }).message);
      }
    }

    // With the initial plan exhausted the card carries the model read-outs.
    const sugg10 = responseOf<Suggestion>(exchange("suggestion_10"));
    expect(sugg10.source).toBe("acquisition");
    expect(root.querySelector(".sugg-source")!.textContent)
      .toBe("source: acquisition");
    expect(root.querySelector(".sugg-mu")!.textContent)
      .toBe(`predicted mean = ${String(sugg10.mu)}`);
    expect(root.querySelector(".sugg-s2")!.textContent)
      .toBe(`predicted variance = ${String(sugg10.s2)}`);
    expect(root.querySelector(".sugg-acq")!.textContent)
      .toBe(`acquisition = ${String(sugg10.acquisition)}`);

    const state10 = responseOf<CampaignState>(exchange("state_10"));
    expect(root.querySelector(".rec-x")!.textContent)
      .toBe(`model recommendation: temperature = ${String(state10.recommendation![0])}`);
    expect(root.querySelector(".rec-mean")!.textContent)
      .toBe(`predicted mean = ${String(state10.predicted_mean)}`);
    const best = state10.best_observed!;
    expect(root.querySelector(".best-observed")!.textContent)
      .toBe(`best observed: y = ${String(best.y)} at temperature = ${String(best.x[0])}`);

    // Closing removes the entry form along with the campaign.
    replay.expect("close", "state_closed");
    root.querySelector<HTMLButtonElement>(".close-campaign")!.click();
    await ctl.idle;
    expect(replay.errors).toEqual([]);
    expect(replay.pending).toBe(0);
    expect(root.querySelector(".status-badge")!.textContent).toBe("closed");
    expect(root.querySelector<HTMLFormElement>("form.entry")!.style.display)
      .toBe("none");
    expect(root.querySelector(".close-campaign")).toBeNull();
  });

  it("keeps a typed entry behind a retry affordance when the network drops", async () => {
    const replay = new FetchReplay();
    replay.install();
    const cid = session.campaign_id;

    replay.expect("state_2", "suggestion_2", "slice_2");
    const ctl = renderCampaign(root, cid);
    await ctl.idle;
    expect(replay.errors).toEqual([]);

    const req = requestOf<{ x: number[]; y: number; note: string }>(
      exchange("tell_3"));
    root.querySelector<HTMLInputElement>(".entry-y")!.value = String(req.y);
    root.querySelector<HTMLInputElement>(".entry-note")!.value = req.note;

    installBrokenFetch();
    submit(root.querySelector<HTMLFormElement>("form.entry")!);
    await ctl.idle;
    expect(root.querySelector(".banner .retry")).not.toBeNull();
    expect(root.querySelector<HTMLInputElement>(".entry-y")!.value)
      .toBe(String(req.y));
    expect(root.querySelector<HTMLInputElement>(".entry-x")!.value)
      .toBe(String(req.x[0]));

    // Back online: the retry button replays the very same tell.
    replay.install();
    replay.expect("tell_3", "state_3", "suggestion_3", "slice_3");
    root.querySelector<HTMLButtonElement>(".banner .retry")!.click();
    await ctl.idle;
    expect(replay.errors).toEqual([]);
    expect(replay.pending).toBe(0);
    expect(root.querySelectorAll("table.observations tbody tr")).toHaveLength(3);
    expect(root.querySelector(".banner .retry")).toBeNull();
  });

  it("stops a locally invalid entry without any request", async () => {
    const replay = new FetchReplay();
    replay.install();

    replay.expect("state_10", "suggestion_10", "slice_10");
    const ctl = renderCampaign(root, session.campaign_id);
    await ctl.idle;
    const before = replay.calls;

    const want = responseOf<{ message: string; field: string }>(
      invalidCase("x_out_of_bounds"));
    root.querySelector<HTMLInputElement>(".entry-x")!.value = "95.25";
    root.querySelector<HTMLInputElement>(".entry-y")!.value = "1.0";
    submit(root.querySelector<HTMLFormElement>("form.entry")!);
    await ctl.idle;
    expect(replay.calls).toBe(before);
    expect(root.querySelector(".entry-x")!.classList.contains("invalid")).toBe(true);
    expect(root.querySelector("form.entry .field-error")!.textContent)
      .toBe(want.message);
  });

  it("renders a captured server 422 inline when the client lets one through", async () => {
    const replay = new FetchReplay();
    replay.install();

    replay.expect("state_10", "suggestion_10", "slice_10");
    const ctl = renderCampaign(root, session.campaign_id);
    await ctl.idle;

    // Client-side checks and the server agree by construction, so force
    // the disagreement: answer an acceptable-looking entry with the
    // captured 422 payload and check the field routing.
    const rejected = invalidCase("x_out_of_bounds");
    replay.expectRaw({
      ...rejected,
      request: { x: [89.0], y: 1.0, note: null },
    });
    root.querySelector<HTMLInputElement>(".entry-x")!.value = "89";
    root.querySelector<HTMLInputElement>(".entry-y")!.value = "1.0";
    submit(root.querySelector<HTMLFormElement>("form.entry")!);
    await ctl.idle;
    expect(replay.errors).toEqual([]);
    const want = responseOf<{ message: string }>(rejected);
    const slot = root.querySelector<HTMLInputElement>(".entry-x")!
      .closest(".form-row")!.querySelector(".field-error")!;
    expect(slot.textContent).toBe(want.message);
  });

  it("wizard blocks reversed bounds before any request is made", async () => {
    const replay = new FetchReplay();
    replay.install();

    const wiz = renderWizard(root);
    const set = (field: string, value: string) => {
      wiz.form.querySelector<HTMLInputElement>(`[data-field="${field}"]`)!.value = value;
    };
    set("variables[0].name", "temperature");
    set("variables[0].lower", "90");
    set("variables[0].upper", "40");
    submit(wiz.form);
    await wiz.idle;
    expect(replay.calls).toBe(0);

    const want = responseOf<{ message: string }>(invalidCase("bounds_order"));
    const upper = wiz.form.querySelector('[data-field="variables[0].upper"]')!;
    expect(upper.classList.contains("invalid")).toBe(true);
    expect(upper.closest(".form-row")!.querySelector(".field-error")!.textContent)
      .toBe(want.message);
  });

  it("wizard surfaces a captured server 422 on the named field", async () => {
    const replay = new FetchReplay();
    replay.install();

    const wiz = renderWizard(root);
    const set = (field: string, value: string) => {
      wiz.form.querySelector<HTMLInputElement>(`[data-field="${field}"]`)!.value = value;
    };
    set("variables[0].name", "temperature");
    set("variables[0].lower", "40");
    set("variables[0].upper", "90");

    const rejected = invalidCase("bounds_order");
    replay.expectRaw({
      ...rejected,
      request: {
        variables: [{ name: "temperature", lower: 40, upper: 90 }],
        kernel: "Matern",
        acquisition: { kind: "EI" },
        seed: 0,
        initial_replicates: 2,
      },
    });
    submit(wiz.form);
    await wiz.idle;
    expect(replay.errors).toEqual([]);
    const upper = wiz.form.querySelector('[data-field="variables[0].upper"]')!;
    expect(upper.classList.contains("invalid")).toBe(true);
    expect(upper.closest(".form-row")!.querySelector(".field-error")!.textContent)
      .toBe(responseOf<{ message: string }>(rejected).message);
  });
});
