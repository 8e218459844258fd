// Typed client for the EcoMate service API. Every page goes through this
// layer; nothing in the UI builds or edits automation JSON itself.

export interface ChatReply {
  session_id: string;
  reply_text: string;
  routine_id: string | null;
  error?: string;
}

export interface Appliance {
  entity_id: string;
  name: string;
  appliance_type: string;
  room_id: string;
  avg_power_watts: number;
  capabilities: string[];
}

export interface RoutineCard {
  id: string;
  alias: string;
  status: "draft" | "saved" | "submitted";
  created_at: string;
}

export interface RoutineDetail extends RoutineCard {
  automation_json: string;
}

export interface ProviderSettings {
  kind: string;
  endpoint_url: string;
  auth_token: string;
  model_id: string;
  temperature: number;
}

export interface Settings {
  username: string;
  ha_base_url: string;
  ha_token: string;
  ha_configured: boolean;
  provider: ProviderSettings;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

let base = "";

export function setApiBase(url: string): void {
  base = url.replace(/\/$/, "");
}

async function call<T>(method: string, path: string, body?: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method,
    headers: body === undefined ? {} : { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (!response.ok) {
    let detail = `HTTP ${response.status}`;
    try {
      const payload = await response.json();
      if (payload && payload.detail) detail = String(payload.detail);
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  if (response.status === 204) return undefined as T;
  return (await response.json()) as T;
}

export function getStarters(): Promise<{ starters: string[] }> {
  return call("GET", "/api/starters");
}

export function sendChat(message: string, sessionId?: string): Promise<ChatReply> {
  const body: { message: string; session_id?: string } = { message };
  if (sessionId) body.session_id = sessionId;
  return call("POST", "/api/chat", body);
}

export function listAppliances(room?: string): Promise<Appliance[]> {
  const query = room ? `?room=${encodeURIComponent(room)}` : "";
  return call("GET", `/api/appliances${query}`);
}

export function addAppliance(appliance: Appliance): Promise<Appliance> {
  return call("POST", "/api/appliances", appliance);
}

export function updateAppliance(appliance: Appliance): Promise<Appliance> {
  return call("PUT", `/api/appliances/${encodeURIComponent(appliance.entity_id)}`, appliance);
}

export function deleteAppliance(entityId: string): Promise<void> {
  return call("DELETE", `/api/appliances/${encodeURIComponent(entityId)}`);
}

export function listRoutines(): Promise<RoutineCard[]> {
  return call("GET", "/api/routines");
}

export function getRoutine(id: string): Promise<RoutineDetail> {
  return call("GET", `/api/routines/${encodeURIComponent(id)}`);
}

export function saveRoutine(id: string): Promise<RoutineCard> {
  return call("POST", `/api/routines/${encodeURIComponent(id)}/save`);
}

export function submitRoutine(id: string): Promise<RoutineCard & { message: string }> {
  return call("POST", `/api/routines/${encodeURIComponent(id)}/submit`);
}

export function deleteRoutine(id: string): Promise<void> {
  return call("DELETE", `/api/routines/${encodeURIComponent(id)}`);
}

export function getSettings(): Promise<Settings> {
  return call("GET", "/api/settings");
}

export interface SettingsPatch {
  username?: string;
  ha_base_url?: string;
  ha_token?: string;
  provider?: Partial<ProviderSettings>;
}

export function putSettings(patch: SettingsPatch): Promise<Settings> {
  return call("PUT", "/api/settings", patch);
}
