// Payload shapes of the /api/v1 workbench API.
export {};
