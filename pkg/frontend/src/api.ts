export interface MenuPayload {
    items: string[];
    categories: string[][];
}

export interface SessionConfig {
    iterations?: number;
    horizon?: number;
    objective?: string;
    seed?: number;
    policy?: string;
    session_length?: number;
}

export interface SessionInfo {
    session_id: string;
    menu: MenuPayload;
    block: number;
}

export interface RewardVector {
    serial: number;
    forage: number;
    recall: number;
}

export interface EndBlockResult {
    session_id: string;
    menu: MenuPayload;
    predicted_reward: RewardVector;
    adaptations: unknown[];
    block: number;
}

export interface TrialRecord {
    label: string;
    latency_ms: number | null;
    block: number;
}

export interface SessionStats {
    session_id: string;
    block: number;
    clicks: number;
    trials: TrialRecord[];
    menu: MenuPayload;
}

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

/** Thin typed client for the session service; menu order is always server-authoritative. */
export class SessionApi {
    constructor(
        private baseUrl: string,
        private fetchFn: typeof fetch = fetch,
    ) {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, {
            method,
            headers: body === undefined ? undefined : { "Content-Type": "application/json" },
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        if (!response.ok) {
            throw new ApiError(response.status, await response.text());
        }
        return (await response.json()) as T;
    }

    createSession(menu: MenuPayload, config: SessionConfig = {}): Promise<SessionInfo> {
        return this.request<SessionInfo>("POST", "/session", { menu, config });
    }

    getMenu(sessionId: string): Promise<SessionInfo> {
        return this.request<SessionInfo>("GET", `/session/${sessionId}/menu`);
    }

    click(sessionId: string, label: string, latencyMs: number, timestamp: number): Promise<unknown> {
        return this.request("POST", `/session/${sessionId}/click`, {
            label,
            latency_ms: latencyMs,
            timestamp,
        });
    }

    endBlock(sessionId: string, body: { objective?: string; policy?: string } = {}): Promise<EndBlockResult> {
        return this.request<EndBlockResult>("POST", `/session/${sessionId}/end-block`, body);
    }

    stats(sessionId: string): Promise<SessionStats> {
        return this.request<SessionStats>("GET", `/session/${sessionId}/stats`);
    }
}
