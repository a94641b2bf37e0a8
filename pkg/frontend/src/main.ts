/** Browser entry point: connect to a service, create or open a trial. */

import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";

const DEFAULT_CONFIG = {
  p_t: 0.3,
  eps1: 0.05,
  eps2: 0.05,
  cohort_size: 3,
  max_total_n: 96,
  design_variant: "two-stage",
  stage1_enabled: true,
  seed: 0,
};

function mount(): void {
  const params = new URLSearchParams(window.location.search);
  const service = params.get("service") ?? "http://127.0.0.1:8035";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");

  const controls = document.createElement("div");
  controls.className = "controls";
  const configBox = document.createElement("textarea");
  configBox.rows = 6;
  configBox.value = JSON.stringify(DEFAULT_CONFIG, null, 1);
  const createButton = document.createElement("button");
  createButton.textContent = "Create trial";
  const openInput = document.createElement("input");
  openInput.placeholder = "existing trial id";
  const openButton = document.createElement("button");
  openButton.textContent = "Open";
  controls.append(configBox, createButton, openInput, openButton);
  document.body.insertBefore(controls, root);

  const dashboard = new Dashboard(root, new ApiClient(service));
  const trialId = params.get("trial");
  if (trialId) void dashboard.load(trialId);

  createButton.addEventListener("click", () => {
    void dashboard.create(JSON.parse(configBox.value));
  });
  openButton.addEventListener("click", () => {
    if (openInput.value) void dashboard.load(openInput.value.trim());
  });
}

mount();
