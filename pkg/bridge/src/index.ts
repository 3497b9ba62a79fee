export { FormatError } from "./reader.js";
export { loadGrid, serializeGrid, classCounts, type LoadedGrid } from "./grid.js";
export { loadStack, serializeStack, type LoadedStack } from "./stack.js";
export { loadWeightMap, serializeWeightMap, type LoadedWeightMap } from "./weightMap.js";
export { iterateDataset, loadIndex, loadPlan, type DatasetBatch } from "./dataset.js";
export { buildStack, runForge, CliError, type BuildRequest } from "./cli.js";
