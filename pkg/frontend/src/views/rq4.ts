/** World-map comparison of up to three diseases: one color per disease,
 * one marker per country sized by study count, marker click drills down. */

import type { MapPointRow } from "../api.js";

export const MAP_COLORS = ["#2563eb", "#dc2626", "#16a34a"];

export interface MapLegendEntry {
  disease: string;
  color: string;
  onRemove: () => void;
}

export interface MapMarker {
  disease: string;
  country: string;
  latitude: number;
  longitude: number;
  studyCount: number;
  color: string;
  radius: number;
  tooltip: string;
  onClick: () => void;
}

export interface Rq4ViewModel {
  kind: "rq4";
  legend: MapLegendEntry[];
  markers: MapMarker[];
  message: string | null;
}

export interface Rq4Handlers {
  onMarkerClick: (disease: string, country: string) => void;
  onRemoveDisease: (disease: string) => void;
}

export function renderRq4Map(
  diseases: string[],
  points: MapPointRow[],
  handlers: Rq4Handlers,
  message: string | null = null,
): Rq4ViewModel {
  const colorOf = new Map(diseases.map((d, i) => [d, MAP_COLORS[i % MAP_COLORS.length]]));
  const legend = diseases.map((disease) => ({
    disease,
    color: colorOf.get(disease)!,
    onRemove: () => handlers.onRemoveDisease(disease),
  }));
  const markers = points.map((point) => ({
    disease: point.disease,
    country: point.country,
    latitude: point.latitude,
    longitude: point.longitude,
    studyCount: point.study_count,
    color: colorOf.get(point.disease) ?? MAP_COLORS[0],
    radius: 4 + 3 * Math.sqrt(point.study_count),
    tooltip: `${point.disease} in ${point.country}: ${point.study_count} ${
      point.study_count === 1 ? "study" : "studies"
    }`,
    onClick: () => handlers.onMarkerClick(point.disease, point.country),
  }));
  return { kind: "rq4", legend, markers, message };
}
