import { ApiClient, ApiError } from "./api";
import { CloudLayout } from "./cloud";
import { buildLinkSegments } from "./links";
import { ExplorerScene } from "./scene";
import {
  deselect,
  initialState,
  persistState,
  restoreState,
  selectEntity,
  setColorMode,
  setFilters,
  setIteration,
  stepIteration,
  withIterations,
  type ViewState,
} from "./state";
import type { EntityDetail, Verdict } from "./types";

const api = new ApiClient("");
const canvas = document.getElementById("view") as HTMLCanvasElement;
const scene = new ExplorerScene(canvas);
const cloud = new CloudLayout();
let state: ViewState = restoreState(localStorage);
let detail: EntityDetail | null = null;

const el = (id: string) => document.getElementById(id)!;
const banner = el("banner");
const toast = el("toast");

function showBanner(message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
}

function clearBanner(): void {
  banner.classList.add("hidden");
}

function showToast(message: string): void {
  toast.textContent = message;
  toast.classList.remove("hidden");
  window.setTimeout(() => toast.classList.add("hidden"), 2500);
}

function save(): void {
  state = { ...state, camera: scene.cameraPose() };
  persistState(state, localStorage);
}

function redrawPoints(): void {
  const { positions, colors, renderIds } = cloud.buffers(state.filters, state.colorMode);
  scene.setPoints(positions, colors);
  currentRenderIds = renderIds;
  el("count").textContent = `${renderIds.length} / ${cloud.size} entities`;
}

let currentRenderIds: string[] = [];

async function loadSnapshot(): Promise<void> {
  if (state.run == null || state.iteration == null) return;
  try {
    const records = await api.getSnapshot(state.run, state.iteration);
    clearBanner();
    cloud.applySnapshot(records);
    redrawPoints();
    el("iteration-label").textContent = `iteration ${state.iteration}`;
    if (state.selected) {
      await loadDetail(state.selected);
    }
  } catch (err) {
    scene.clearPoints();
    currentRenderIds = [];
    showBanner(`failed to load snapshot: ${(err as Error).message}`);
  }
}

async function loadDetail(id: string): Promise<void> {
  if (state.run == null) return;
  try {
    detail = await api.getEntity(state.run, id, state.iteration ?? undefined);
    scene.setLinkSegments(buildLinkSegments(detail));
    renderDetailPanel();
  } catch (err) {
    if ((err as ApiError).status === 404) {
      showToast(`unknown entity ${id}`);
    } else {
      showBanner(`failed to load entity: ${(err as Error).message}`);
    }
  }
}

function renderDetailPanel(): void {
  const panel = el("detail");
  if (!detail) {
    panel.classList.add("hidden");
    return;
  }
  panel.classList.remove("hidden");
  el("detail-id").textContent = detail.id;
  el("detail-meta").textContent =
    `links ${detail.link_count} · degree ${detail.degree}` +
    (detail.fincrime ? " · fincrime exit" : "");
  const history = el("tag-history");
  history.innerHTML = "";
  for (const tag of detail.tags.slice().reverse()) {
    const item = document.createElement("li");
    item.textContent = `${tag.verdict} — ${tag.note || "(no note)"} · ${tag.timestamp}`;
    history.appendChild(item);
  }
}

function clearSelection(): void {
  state = deselect(state);
  detail = null;
  scene.clearLinks();
  renderDetailPanel();
  save();
}

async function boot(): Promise<void> {
  let runs: string[];
  try {
    runs = await api.listRuns();
  } catch (err) {
    showBanner(`service unreachable: ${(err as Error).message}`);
    return;
  }
  if (!runs.length) {
    showBanner("no runs available; create one with `amlwb pipeline --all`");
    return;
  }
  const run = state.run && runs.includes(state.run) ? state.run : runs[0]!;
  state = { ...state, run, selected: null };
  const runSelect = el("run") as HTMLSelectElement;
  runSelect.innerHTML = "";
  for (const name of runs) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    opt.selected = name === run;
    runSelect.appendChild(opt);
  }
  try {
    state = withIterations(state, await api.listSnapshots(run));
  } catch (err) {
    showBanner(`run has no snapshots: ${(err as Error).message}`);
    return;
  }
  if (state.camera) scene.applyCameraPose(state.camera);
  syncControls();
  await loadSnapshot();
}

function syncControls(): void {
  (el("fincrime-only") as HTMLInputElement).checked = state.filters.fincrimeOnly;
  (el("min-degree") as HTMLInputElement).value =
    state.filters.minDegree == null ? "" : String(state.filters.minDegree);
  (el("color-mode") as HTMLSelectElement).value = state.colorMode;
  const slider = el("iteration") as HTMLInputElement;
  slider.min = "0";
  slider.max = String(Math.max(0, state.iterations.length - 1));
  slider.value = String(
    state.iteration == null ? 0 : state.iterations.indexOf(state.iteration),
  );
}

// -- event wiring ---------------------------------------------------------

el("run").addEventListener("change", async (ev) => {
  const run = (ev.target as HTMLSelectElement).value;
  state = { ...initialState, run, colorMode: state.colorMode };
  state = withIterations(state, await api.listSnapshots(run));
  syncControls();
  clearSelection();
  await loadSnapshot();
  save();
});

el("iteration").addEventListener("input", async (ev) => {
  const at = Number((ev.target as HTMLInputElement).value);
  const iteration = state.iterations[at];
  if (iteration != null) {
    state = setIteration(state, iteration);
    await loadSnapshot();
    save();
  }
});

el("prev").addEventListener("click", async () => {
  state = stepIteration(state, -1);
  syncControls();
  await loadSnapshot();
  save();
});

el("next").addEventListener("click", async () => {
  state = stepIteration(state, 1);
  syncControls();
  await loadSnapshot();
  save();
});

el("fincrime-only").addEventListener("change", (ev) => {
  state = setFilters(state, { fincrimeOnly: (ev.target as HTMLInputElement).checked });
  redrawPoints();
  save();
});

el("min-degree").addEventListener("change", (ev) => {
  const raw = (ev.target as HTMLInputElement).value.trim();
  state = setFilters(state, { minDegree: raw === "" ? null : Number(raw) });
  redrawPoints();
  save();
});

el("color-mode").addEventListener("change", (ev) => {
  state = setColorMode(state, (ev.target as HTMLSelectElement).value as "degree" | "grey");
  redrawPoints();
  save();
});

let downAt: [number, number] | null = null;
canvas.addEventListener("pointerdown", (ev) => {
  downAt = [ev.clientX, ev.clientY];
});
canvas.addEventListener("pointerup", async (ev) => {
  if (!downAt) return;
  const moved = Math.hypot(ev.clientX - downAt[0], ev.clientY - downAt[1]);
  downAt = null;
  if (moved > 4) return; // it was a drag
  const index = scene.pick(ev);
  if (index == null) {
    clearSelection();
    return;
  }
  const id = currentRenderIds[index];
  if (id == null) return;
  const before = state;
  state = selectEntity(state, id, cloud.knownIds());
  if (state !== before) {
    await loadDetail(id);
    save();
  }
});

el("deselect").addEventListener("click", clearSelection);

el("tag-form").addEventListener("submit", async (ev) => {
  ev.preventDefault();
  if (!detail || state.run == null) return;
  const verdict = (el("verdict") as HTMLSelectElement).value;
  const note = (el("note") as HTMLInputElement).value;
  if (!verdict) {
    showToast("pick a verdict first");
    return;
  }
  try {
    await api.postTag(state.run, detail.id, verdict, note);
    cloud.setVerdict(detail.id, verdict as Verdict);
    redrawPoints();
    await loadDetail(detail.id);
    showToast(`tagged ${verdict}`);
    (el("note") as HTMLInputElement).value = "";
  } catch (err) {
    showBanner(`tag rejected: ${(err as Error).message}`);
  }
});

window.addEventListener("resize", () => scene.resize());
window.addEventListener("beforeunload", save);

void boot();
