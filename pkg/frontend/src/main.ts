// Hash router: #/new (or nothing) shows the creation wizard, #/c/<id> a
// campaign. A service on another origin is reached via ?api=<base-url>.

import { setApiBase } from "./api.js";
import { renderCampaign } from "./campaign.js";
import { renderWizard } from "./wizard.js";

const api = new URLSearchParams(location.search).get("api");
if (api) setApiBase(api);

function route(): void {
  const root = document.getElementById("app")!;
  root.replaceChildren();
  const match = /^#\/c\/([A-Za-z0-9]+)$/.exec(location.hash);
  if (match) {
    renderCampaign(root, match[1]);
  } else {
    renderWizard(root);
  }
}

window.addEventListener("hashchange", route);
route();
