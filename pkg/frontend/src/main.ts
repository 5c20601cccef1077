import { SessionApi } from "./api.js";
import { SessionController } from "./session.js";

const SAMPLE_MENU = {
    items: [
        "cat", "dog", "horse", "---",
        "carrot", "potato", "onion", "leek", "---",
        "gloves", "scarf", "jacket", "boots", "shirt", "belt",
    ],
    categories: [
        ["cat", "dog", "horse"],
        ["carrot", "potato", "onion", "leek"],
        ["gloves", "scarf", "jacket", "boots", "shirt", "belt"],
    ],
};

function element(id: string): HTMLElement {
    const found = document.getElementById(id);
    if (!found) {
        throw new Error(`missing #${id}`);
    }
    return found;
}

function boot(): void {
    const policySelect = element("policy") as HTMLSelectElement;
    const seedInput = element("seed") as HTMLInputElement;
    const startButton = element("start") as HTMLButtonElement;
    const endButton = element("end-block") as HTMLButtonElement;

    const api = new SessionApi("");
    const controller = new SessionController(api, {
        menuContainer: element("menu"),
        targetLabel: element("target"),
        rewardPanel: element("rewards"),
        statusLine: element("status"),
    });

    startButton.addEventListener("click", () => {
        void controller
            .start(SAMPLE_MENU, {
                policy: policySelect.value,
                seed: Number(seedInput.value) || 0,
                iterations: 400,
                horizon: 4,
            }, Number(seedInput.value) || 1)
            .then(() => {
                endButton.disabled = false;
                startButton.disabled = true;
            })
            .catch((error) => {
                element("status").textContent = `failed to start: ${error}`;
            });
    });

    endButton.addEventListener("click", () => {
        endButton.disabled = true;
        void controller
            .endBlock()
            .catch((error) => {
                element("status").textContent = `end-block failed: ${error}`;
            })
            .finally(() => {
                endButton.disabled = false;
            });
    });
}

boot();
