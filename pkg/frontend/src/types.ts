/** Wire types of the gateway HTTP API. */

export interface CatalogProduct {
  product_id: string;
  name: string;
  unit: string;
  price_usd: number;
  energy_kcal: number;
  protein_g: number;
  fat_g: number;
  ghg_kgco2e: number;
  acid_kgso2e: number;
  eutro_kgpo4e: number;
  land_m2: number;
  water_l: number;
  stressed_water_l: number;
}

export interface CatalogResponse {
  n_products: number;
  products: CatalogProduct[];
}

export interface Recommendation {
  basket: Record<string, number>;
  losses: number[];
  ratios: Record<string, number>;
  cosine_similarity: number;
  passed_filter: boolean;
}

export interface JobResponse {
  job_id: string;
  status: "pending" | "completed" | "failed";
  recommendations?: Recommendation[];
  error?: string;
}

export interface OptimizePayload {
  basket: Record<string, number>;
  method?: string;
  weights?: number[];
  seed?: number;
  budget?: number;
}

/** Objective indices (0-based) grouped for the priority sliders. */
export const OBJECTIVE_GROUPS: { label: string; indices: number[] }[] = [
  { label: "Taste", indices: [0] },
  { label: "Cost", indices: [1] },
  { label: "Health", indices: [2, 3, 4] },
  { label: "Environment", indices: [5, 6, 7, 8, 9, 10] },
];

export const OBJECTIVE_NAMES = [
  "taste",
  "cost",
  "energy",
  "protein",
  "fat",
  "GHG",
  "acidification",
  "eutrophication",
  "land",
  "water",
  "stressed water",
];

/** ratios key shown for each bar, aligned with losses 2..11 */
export const RATIO_FEATURES = [
  "price_usd",
  "energy_kcal",
  "protein_g",
  "fat_g",
  "ghg_kgco2e",
  "acid_kgso2e",
  "eutro_kgpo4e",
  "land_m2",
  "water_l",
  "stressed_water_l",
] as const;

export const GHG_OBJECTIVE_INDEX = 5; // loss index of the GHG ratio
