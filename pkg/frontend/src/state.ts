import type { EntityRecord } from "./types";

export type ColorMode = "degree" | "grey";

export interface Filters {
  minDegree: number | null;
  fincrimeOnly: boolean;
}

export interface CameraPose {
  position: [number, number, number];
  target: [number, number, number];
}

/** Everything the explorer needs to restore a session, minus the data. */
export interface ViewState {
  run: string | null;
  iteration: number | null;
  iterations: number[];
  filters: Filters;
  selected: string | null;
  colorMode: ColorMode;
  camera: CameraPose | null;
}

export const initialState: ViewState = {
  run: null,
  iteration: null,
  iterations: [],
  filters: { minDegree: null, fincrimeOnly: false },
  selected: null,
  colorMode: "degree",
  camera: null,
};

/** Adopt the server's snapshot list, keeping the iteration when still valid. */
export function withIterations(state: ViewState, iterations: number[]): ViewState {
  const sorted = [...iterations].sort((a, b) => a - b);
  let iteration = state.iteration;
  if (iteration == null || !sorted.includes(iteration)) {
    iteration = sorted.length ? sorted[sorted.length - 1]! : null;
  }
  return { ...state, iterations: sorted, iteration };
}

/** Only iterations the server listed are accepted. */
export function setIteration(state: ViewState, iteration: number): ViewState {
  if (!state.iterations.includes(iteration)) return state;
  return { ...state, iteration };
}

export function stepIteration(state: ViewState, direction: 1 | -1): ViewState {
  if (state.iteration == null || !state.iterations.length) return state;
  const at = state.iterations.indexOf(state.iteration);
  const next = state.iterations[at + direction];
  return next == null ? state : { ...state, iteration: next };
}

export function setFilters(state: ViewState, filters: Partial<Filters>): ViewState {
  return { ...state, filters: { ...state.filters, ...filters } };
}

export function setColorMode(state: ViewState, colorMode: ColorMode): ViewState {
  return { ...state, colorMode };
}

/** Selection must reference an entity present in the loaded snapshot. */
export function selectEntity(
  state: ViewState,
  id: string,
  known: ReadonlySet<string>,
): ViewState {
  if (!known.has(id)) return state;
  return { ...state, selected: id };
}

export function deselect(state: ViewState): ViewState {
  return { ...state, selected: null };
}

/** Conjunctive filter test used by both the cloud and the sidebar counts. */
export function matchesFilters(record: EntityRecord, filters: Filters): boolean {
  if (filters.minDegree != null && record.degree < filters.minDegree) return false;
  if (filters.fincrimeOnly && !record.fincrime) return false;
  return true;
}

const STORAGE_KEY = "amlwb-explorer-view";

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function persistState(state: ViewState, storage: StorageLike): void {
  const { run, iteration, filters, colorMode, camera } = state;
  storage.setItem(STORAGE_KEY, JSON.stringify({ run, iteration, filters, colorMode, camera }));
}

export function restoreState(storage: StorageLike): ViewState {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return initialState;
  try {
    const saved = JSON.parse(raw) as Partial<ViewState>;
    return {
      ...initialState,
      run: saved.run ?? null,
      iteration: saved.iteration ?? null,
      filters: { ...initialState.filters, ...(saved.filters ?? {}) },
      colorMode: saved.colorMode === "grey" ? "grey" : "degree",
      camera: saved.camera ?? null,
    };
  } catch {
    return initialState;
  }
}
