/** User-adjustable filter state; transitions are pure so rejection paths
 * (like a fourth map disease) provably never reach the network. */

import type { DrilldownRow } from "./api.js";

export const MAX_MAP_DISEASES = 3;

export interface DrilldownSelector {
  disease: string;
  country?: string;
  rq?: string;
}

export interface DrilldownPanel {
  selector: DrilldownSelector;
  rows: DrilldownRow[];
}

export interface R0Range {
  lo: number;
  hi: number;
}

export interface ViewState {
  selectedDisease: string | null;
  r0Range: R0Range;
  mapDiseases: string[];
  drilldown: DrilldownPanel | null;
  papersPage: number;
  papersQuery: string;
}

export function initialState(): ViewState {
  return {
    selectedDisease: null,
    r0Range: { lo: 0, hi: 20 },
    mapDiseases: [],
    drilldown: null,
    papersPage: 1,
    papersQuery: "",
  };
}

export type AddMapDiseaseResult =
  | { ok: true; state: ViewState }
  | { ok: false; reason: string };

export function addMapDisease(state: ViewState, disease: string): AddMapDiseaseResult {
  const key = disease.trim().toLowerCase();
  if (!key) {
    return { ok: false, reason: "enter a disease name" };
  }
  if (state.mapDiseases.includes(key)) {
    return { ok: true, state };
  }
  if (state.mapDiseases.length >= MAX_MAP_DISEASES) {
    return {
      ok: false,
      reason: `at most ${MAX_MAP_DISEASES} diseases can be compared on the map`,
    };
  }
  return { ok: true, state: { ...state, mapDiseases: [...state.mapDiseases, key] } };
}

export function removeMapDisease(state: ViewState, disease: string): ViewState {
  return { ...state, mapDiseases: state.mapDiseases.filter((d) => d !== disease) };
}

export function setR0Range(state: ViewState, lo: number, hi: number): ViewState {
  const [a, b] = lo <= hi ? [lo, hi] : [hi, lo];
  return { ...state, r0Range: { lo: a, hi: b } };
}
