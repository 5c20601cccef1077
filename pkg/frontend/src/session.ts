import { ApiError, SessionApi } from "./api.js";
import type { EndBlockResult, MenuPayload, SessionConfig } from "./api.js";
import { MenuView } from "./menu_view.js";

const SEPARATOR = "---";

export interface TrialStat {
    label: string;
    latencyMs: number;
    block: number;
}

interface QueuedClick {
    label: string;
    latencyMs: number;
    timestamp: number;
}

/** Deterministic 32-bit PRNG so scripted sessions replay exactly. */
export function mulberry32(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state + 0x6d2b79f5) | 0;
        let t = Math.imul(state ^ (state >>> 15), 1 | state);
        t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

/** Rank-frequency target sampler mirroring the evaluation workloads. */
export function zipfTargetSampler(labels: string[], shape: number, seed: number): () => string {
    const rand = mulberry32(seed);
    const weights = labels.map((_, i) => Math.pow(i + 1, -shape));
    const total = weights.reduce((a, b) => a + b, 0);
    const order = labels.slice();
    for (let i = order.length - 1; i > 0; i--) {
        const j = Math.floor(rand() * (i + 1));
        [order[i], order[j]] = [order[j], order[i]];
    }
    return () => {
        let u = rand() * total;
        for (let rank = 0; rank < order.length; rank++) {
            u -= weights[rank];
            if (u <= 0) {
                return order[rank];
            }
        }
        return order[order.length - 1];
    };
}

export interface ControllerElements {
    menuContainer: HTMLElement;
    targetLabel: HTMLElement;
    rewardPanel: HTMLElement;
    statusLine: HTMLElement;
}

/**
 * Drives one interactive session: prompts targets, records selection
 * latencies, reports clicks to the server (queueing them while offline), and
 * applies adapted menus at block boundaries.
 */
export class SessionController {
    readonly trials: TrialStat[] = [];
    errorClicks = 0;
    block = 0;

    private sessionId = "";
    private menu: MenuPayload = { items: [], categories: [] };
    private view: MenuView;
    private target = "";
    private displayedAt = 0;
    private queue: QueuedClick[] = [];
    private nextTarget: () => string = () => "";
    private pendingBlock = false;

    constructor(
        private api: SessionApi,
        private elements: ControllerElements,
        private now: () => number = () => performance.now(),
    ) {
        this.view = new MenuView(elements.menuContainer, (label) => {
            void this.handleClick(label);
        });
    }

    get rendered(): MenuView {
        return this.view;
    }

    get id(): string {
        return this.sessionId;
    }

    async start(menu: MenuPayload, config: SessionConfig = {}, targetSeed = 1): Promise<void> {
        const session = await this.api.createSession(menu, config);
        this.sessionId = session.session_id;
        this.applyMenu(session.menu);
        this.nextTarget = zipfTargetSampler(
            session.menu.items.filter((e) => e !== SEPARATOR),
            1.5,
            targetSeed,
        );
        this.block = session.block;
        this.promptNextTarget();
    }

    private applyMenu(menu: MenuPayload): void {
        this.menu = menu;
        this.view.render(menu);
    }

    private promptNextTarget(): void {
        this.target = this.nextTarget();
        this.elements.targetLabel.textContent = this.target;
        this.displayedAt = this.now();
    }

    get currentTarget(): string {
        return this.target;
    }

    private async handleClick(label: string): Promise<void> {
        if (this.pendingBlock) {
            return;
        }
        if (label !== this.target) {
            this.errorClicks += 1;
            this.elements.statusLine.textContent = `wrong item (${this.errorClicks} errors)`;
            return; // the trial continues until the target is selected
        }
        const latency = this.now() - this.displayedAt;
        this.trials.push({ label, latencyMs: latency, block: this.block });
        await this.sendClick({ label, latencyMs: latency, timestamp: Date.now() });
        this.elements.statusLine.textContent = `${this.trials.length} selections`;
        this.promptNextTarget();
    }

    private async sendClick(click: QueuedClick): Promise<void> {
        await this.flushQueue();
        try {
            await this.api.click(this.sessionId, click.label, click.latencyMs, click.timestamp);
        } catch (error) {
            if (error instanceof ApiError) {
                throw error; // the server rejected it; do not retry
            }
            this.queue.push(click); // network failure: retry later in order
            this.elements.statusLine.textContent = `offline, ${this.queue.length} queued`;
        }
    }

    /** Re-send queued clicks in order; stops at the first network failure. */
    async flushQueue(): Promise<void> {
        while (this.queue.length > 0) {
            const click = this.queue[0];
            try {
                await this.api.click(this.sessionId, click.label, click.latencyMs, click.timestamp);
                this.queue.shift();
            } catch (error) {
                if (error instanceof ApiError) {
                    this.queue.shift();
                    continue;
                }
                return;
            }
        }
    }

    get queuedClicks(): number {
        return this.queue.length;
    }

    async endBlock(body: { objective?: string; policy?: string } = {}): Promise<EndBlockResult> {
        if (this.trials.length === 0) {
            throw new Error("complete at least one trial before ending the block");
        }
        this.pendingBlock = true;
        this.view.setEnabled(false);
        try {
            await this.flushQueue();
            const result = await this.api.endBlock(this.sessionId, body);
            const moved = this.movedLabels(this.menu, result.menu);
            this.view.highlight(moved);
            this.applyMenu(result.menu);
            this.block = result.block;
            this.showRewards(result, moved);
            this.promptNextTarget();
            return result;
        } finally {
            this.pendingBlock = false;
            this.view.setEnabled(true);
        }
    }

    private movedLabels(before: MenuPayload, after: MenuPayload): string[] {
        const previous = new Map(before.items.map((entry, row) => [entry, row]));
        return after.items.filter(
            (entry) => entry !== SEPARATOR && previous.get(entry) !== after.items.indexOf(entry),
        );
    }

    private showRewards(result: EndBlockResult, moved: string[]): void {
        const doc = this.elements.rewardPanel.ownerDocument;
        this.elements.rewardPanel.replaceChildren();
        const heading = doc.createElement("div");
        heading.className = "reward-heading";
        heading.textContent =
            result.adaptations.length === 0 ? "no adaptation" : `${result.adaptations.length} adaptation(s)`;
        this.elements.rewardPanel.appendChild(heading);
        for (const [name, value] of Object.entries(result.predicted_reward)) {
            const row = doc.createElement("div");
            row.className = "reward-row";
            row.dataset.model = name;
            row.dataset.value = String(value);
            row.textContent = `${name}: ${String(value)}`;
            this.elements.rewardPanel.appendChild(row);
        }
        if (moved.length > 0) {
            const diff = doc.createElement("div");
            diff.className = "diff-row";
            diff.textContent = `moved: ${moved.join(", ")}`;
            this.elements.rewardPanel.appendChild(diff);
        }
    }

    /** Predicted rewards as currently displayed, keyed by model name. */
    displayedRewards(): Record<string, number> {
        const rows = this.elements.rewardPanel.querySelectorAll(".reward-row");
        const out: Record<string, number> = {};
        rows.forEach((row) => {
            const el = row as HTMLElement;
            out[el.dataset.model ?? ""] = Number(el.dataset.value);
        });
        return out;
    }
}
