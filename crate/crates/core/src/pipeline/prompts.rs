//! Prompt templates sent to the provider, kept word for word (including the
//! original typos) because they are the request format the pipeline relies on.

/// Labeling system prompt.
pub const LABELING_SYSTEM: &str = r#"Assume you're assisting users in automating picture labeling, You will receive a base64 code of a image. Based on all this data, generate the information of data as JSON format.

The format should like:

{
    "name":"object_name",
    "description":"object_description",
    "category":"object_category"
}.

Here, I will offer you the object_name, you should use it to generate the JSON. Description should only include the function, color, material, aesthetics and psychology of this object in the image, please use at most three simple sentences to finish the description, try to keep description very concise. Category is the category in reality of the object in the image. Categories such as "3D model", "3D shape" and so on are not be allowed. Do not generate extra string or information when you generate JSON."#;

/// Appended to the labeling user text on the retry after a banned category.
pub const LABELING_RETRY_SUFFIX: &str = "The previous answer used a category that is not allowed. Name the real-world category of the object instead.";

/// Scene-understanding prompt, split so a clause can be dropped when its
/// input channel is disabled. Joined it reads exactly as the full template.
pub const SCENE_OBJECTS_CLAUSE: &str = "I will give you a list of objects in json format, includes the names, coordinate points, rotation vectors, sizes of the objects, and hexadecimal color codes of objects in the 3D scene, ";
pub const SCENE_IMAGE_CLAUSE: &str =
    "also I will provide you the top view picture of the 3D scene, ";
pub const SCENE_TAIL: &str = "please understand this scene, please understand this scene.";

pub const SUGGESTIONS_SYSTEM: &str = r#"As a VR scene designer, you are presented with a detailed information of a 3D space scene. Your task is to interpret abstract user instructions for modifying this VR scene. Based on the scene's current layout, objects' attributes, and user commands, propose several creative and feasible suggestions for adjustments. These suggestions may involve repositioning furniture, altering object colors, adjusting sizes, or introducing new elements to enhance the space's functionality and aesthetic appeal. Ensure your proposals are clear, specific, and aligned with the user's desires, providing a blend of practicality and innovative design. Please provide modification suggestions and solutions with JSON format. For example, if you provide some suggestions, the result is:

{
    "suggestions":[
        {
            "suggestion":"add something and move something, change color"
        },
        {
            "suggestion":"add something and change color, also, change style"
        },
        {
            "suggestion":"change color, destroy something"
        },
        ....
        {
            "suggestion":"move something, rotate something"
        }]
}

Each suggestions item can only include the suggestion, DO NOT include any other characters. Avoid extraneous text or characters outside the specified JSON format. The return format only includes JSON content, start with the first { of json."#;

pub const ACTIONS_SYSTEM: &str = r#"Translate design suggestions into specific VR 3D space modifications based on JSON scene parameters. Output must strictly adhere to the JSON format below, detailing implementation steps for Add, Move, Rotate, Scale, Color, Style, and Destroy actions. You must remember DO NOT include other redundant text in the generated content, the return format only includes JSON content, start with the first "{" of JSON:

{
"steps": [{
    "action": "Specify_Action_Name",
    "action_command": "Action_Name {Object_Name} to [Modification_Value]",
    "selected_obj": "Object_Name",
    "key": "Modification_Value"
    },
    ...
    {
    "action": "Specify_Action_Name",
    "action_command": "Action_Name {Object_Name} to [Modification_Value]",
    "selected_obj": "Object_Name",
    "key": "Modification_Value"
    }]
}

Notes: For Add Command: Set 'action_name' to "Add", use the format "Add {Object} to [(Position)]", and provide "key" with Vector3 position in (0,0,0) format as "Modification_Value". For Move Command: Use "Move {Object_Name} to [(New_Position)]" format. For Rotate Command: Use "Rotate {Object} [(Angle)]" format, specifying Vector3 angle in (0,0,0) format in "key". Make sure the back of objects facing the nearest wall. For Scale Command: Use "Scale {TV} [1.2] times", should specify scaling extent as an integer in "key". For Color Command: Use "Color {Table} to red[(255, 0, 0)]", color require RGB Vector3 in (0,0,0) format for Modification_Value. For Style Command, Use "Change {Table} to [Wood]", "key" is the material type as a string, including Basket, Black_Plastic, Brick, Bronze_Metal, Copper_metal, Dark_Oak, Flow_Water, Flower_Pattern, Glass, Glass_Dark, Golden_metal_material, Grass, Leaf_Pattern, Leather, Marble, Rustic_Wood, Shiny_Metal. For Destroy Command: "Destroy {Cup}", need "selected_obj", action command and key. If the object you want to manipulate does not exist in the scene, you will need to "Add" this object before you manipulate it. Do not forget {} and () Avoid extraneous text or characters outside the specified JSON format, the return format only includes json content, start with the first "{" of JSON""#;

pub const CATEGORY_SYSTEM: &str = r#"I will offer you a name of object, a list of categories, you should provide me with the perfect category that best fit the object and the description about the object, description should include the function, material, aesthetics and psychology of this object, please use at most three simple sentences to finish the description, try to keep description very concise.you give me categories you chosen and description as this JSON format:

{
"Category1":"Category1",
"Description":"description"
}"#;

/// Appended to the category user text on the retry after an unlisted category.
pub const CATEGORY_RETRY_SUFFIX: &str = "The previous answer chose a category that is not in the list. Choose exactly one of the listed categories.";

/// Stands in for the image inside user text; the bytes travel in
/// `PromptBundle::image_payload`.
pub const IMAGE_PLACEHOLDER: &str = "[attached image]";

/// Marker that opens the object-parameter block in user text.
pub const OBJECT_LIST_LABEL: &str = "Object list: ";
pub const TOP_VIEW_LABEL: &str = "Top View Image: ";
